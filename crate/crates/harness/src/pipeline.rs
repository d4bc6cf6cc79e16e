use std::path::{Path, PathBuf};

use labcap_core::ces::{derive_lv_with, LotkaVolterraCoeffs};
use labcap_core::fem::{self, FixedPointStats, Grid};
use labcap_core::model::{Equilibrium, ReactionCoeffs, ScaledModelParams};
use labcap_core::stability::{self, CriticalPoint, StabilityReport};
use labcap_core::wnl::{self, Regime, WnlResult, WnlVectors};
use labcap_core::{Mat2, Vec2};
use log::{info, warn};
use serde::Serialize;

use crate::artifacts;
use crate::config::ExperimentConfig;
use crate::error::{Result, Stage, StageExt};

/// Everything up to and including the linear analysis.
#[derive(Clone, Debug, Serialize)]
pub struct Prepared {
    /// Coefficients derived from the CES block, when there is one.
    pub lotka_volterra: Option<LotkaVolterraCoeffs<f64>>,
    pub ces_reaction: Option<ReactionCoeffs<f64>>,
    /// Coefficients actually used: the override if given, else the CES ones.
    pub reaction: ReactionCoeffs<f64>,
    pub params: ScaledModelParams<f64>,
    pub equilibrium: Equilibrium<f64>,
    pub critical: CriticalPoint<f64>,
    pub stability: StabilityReport<f64>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let mut lotka_volterra = None;
    let mut ces_reaction = None;
    if let Some(ces) = &cfg.ces {
        let (p, f) = ces.params().at(Stage::Ces)?;
        let lv = derive_lv_with(&p, &f, ces.convention).at(Stage::Ces)?;
        ces_reaction = Some(ReactionCoeffs::from_lotka_volterra(&lv).at(Stage::Ces)?);
        lotka_volterra = Some(lv);
    }
    let reaction = match (cfg.reaction, ces_reaction) {
        (Some(r), _) | (None, Some(r)) => r,
        (None, None) => unreachable!("validated config has a reaction source"),
    };
    let (b12, b21) = lotka_volterra
        .as_ref()
        .map_or((1.0, 1.0), |lv| (lv.b12(), lv.b21()));
    let diffusion = cfg.diffusion.scaled(b12, b21);
    let base = ScaledModelParams::with_relative_saturation(
        reaction,
        diffusion,
        0.0,
        cfg.saturation_factor,
        cfg.gamma,
    )
    .at(Stage::Model)?;
    let equilibrium = base.equilibrium().at(Stage::Model)?;
    let critical = stability::critical_threshold(&base, &equilibrium).at(Stage::Stability)?;
    let params = base.with_b(cfg.b_multiplier * critical.b_c);
    let stability = stability::analyze(&params, &equilibrium).at(Stage::Stability)?;
    Ok(Prepared {
        lotka_volterra,
        ces_reaction,
        reaction,
        params,
        equilibrium,
        critical,
        stability,
    })
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Run the finite element simulation (the slow part).
    pub fem: bool,
    /// Write artifacts into `<out_dir>/<name>/`.
    pub out_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn full(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            fem: true,
            out_dir: Some(out_dir.into()),
        }
    }

    pub fn analysis_only() -> Self {
        Self {
            fem: false,
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub reaction: ReactionCoeffs<f64>,
    pub equilibrium: Equilibrium<f64>,
    pub b_c: f64,
    pub k_c: f64,
    /// Nearest admissible wavenumber on the half-integer grid.
    pub k_bar_c: f64,
    pub b: f64,
    pub epsilon: f64,
    pub regime: Regime,
    pub sigma: f64,
    pub ell: f64,
    pub a_inf: Option<f64>,
    pub fem: Option<FemSummary>,
    /// Aligned FEM vs weakly nonlinear MSE; supercritical runs only.
    pub mse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FemSummary {
    pub steady_time: Option<f64>,
    pub final_time: f64,
    pub steps: usize,
    pub fixed_point: FixedPointStats,
    pub negative_steps: usize,
    pub min_value: f64,
    pub dominant_mode: f64,
}

impl ComparisonReport {
    pub fn steady_time(&self) -> Option<f64> {
        self.fem.as_ref().and_then(|f| f.steady_time)
    }

    pub fn dominant_mode(&self) -> Option<f64> {
        self.fem.as_ref().map(|f| f.dominant_mode)
    }
}

/// Amplitude analysis without the sampled pattern.
#[derive(Clone, Debug, Serialize)]
pub struct WnlSummary {
    pub vectors: WnlVectors<f64>,
    pub b2: f64,
    pub sigma: f64,
    pub ell: f64,
    pub regime: Regime,
    pub a_inf: Option<f64>,
    pub w20: Vec2<f64>,
    pub w22: Vec2<f64>,
}

impl From<&WnlResult<f64>> for WnlSummary {
    fn from(w: &WnlResult<f64>) -> Self {
        Self {
            vectors: w.vectors,
            b2: w.b2,
            sigma: w.sigma,
            ell: w.ell,
            regime: w.regime,
            a_inf: w.a_inf,
            w20: w.w20,
            w22: w.w22,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub wnl: WnlResult<f64>,
    pub report: ComparisonReport,
    pub final_state: Option<labcap_core::Field>,
    /// WNL pattern aligned with the FEM state.
    pub pattern: Option<(Vec<f64>, Vec<f64>)>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    config: &'a ExperimentConfig,
    report: &'a ComparisonReport,
    params: &'a ScaledModelParams<f64>,
    reaction_matrix: Mat2<f64>,
    diffusion_matrix: Mat2<f64>,
    stability: &'a StabilityReport<f64>,
    lotka_volterra: &'a Option<LotkaVolterraCoeffs<f64>>,
    ces_reaction: &'a Option<ReactionCoeffs<f64>>,
    wnl: WnlSummary,
}

/// Runs CES, rescaling, linear and weakly nonlinear analysis and, if asked,
/// the FEM simulation and the comparison, writing artifacts when an output
/// directory is given.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let p = &prepared.params;
    let eq = &prepared.equilibrium;
    let grid = Grid::new(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.nodes).at(Stage::Fem)?;
    let nodes = grid.nodes();
    let wnl_result = wnl::analyze(p, eq, &nodes, cfg.normalization).at(Stage::Wnl)?;
    info!(
        "{}: b_c = {:.6}, k_c = {:.6}, sigma = {:.6}, ell = {:.6} ({:?})",
        cfg.name,
        prepared.critical.b_c,
        prepared.critical.k_c,
        wnl_result.sigma,
        wnl_result.ell,
        wnl_result.regime
    );

    let mut fem_summary = None;
    let mut final_state = None;
    let mut pattern = None;
    let mut mse = None;
    let mut history = Vec::new();
    if opts.fem {
        let init = fem::initial_condition(eq, &grid);
        let traj = fem::run_to_steady(&init, p, &grid, &cfg.solver).at(Stage::Fem)?;
        let dominant = fem::dominant_mode(&traj.final_state, &grid).at(Stage::Comparison)?;
        fem_summary = Some(FemSummary {
            steady_time: traj.steady_time,
            final_time: traj.snapshots.last().map_or(0.0, |s| s.t),
            steps: traj.steps,
            fixed_point: traj.fp_stats,
            negative_steps: traj.negative_steps,
            min_value: traj.min_value,
            dominant_mode: dominant,
        });
        if wnl_result.regime == Regime::Supercritical {
            let parts = wnl_result.pattern_parts(eq, &nodes).at(Stage::Wnl)?;
            let (err, sign) =
                wnl::aligned_mse(&traj.final_state.labor, &traj.final_state.capital, &parts)
                    .at(Stage::Comparison)?;
            mse = Some(err);
            pattern = Some(parts.combine(sign));
        }
        if !traj.reached_steady() {
            warn!("{}: no steady state within {} steps", cfg.name, traj.steps);
        }
        history = traj.snapshots;
        final_state = Some(traj.final_state);
    } else if wnl_result.regime == Regime::Supercritical {
        pattern = Some((wnl_result.pattern_l.clone(), wnl_result.pattern_k.clone()));
    }

    let report = ComparisonReport {
        name: cfg.name.clone(),
        reaction: prepared.reaction,
        equilibrium: *eq,
        b_c: prepared.critical.b_c,
        k_c: prepared.critical.k_c,
        k_bar_c: wnl_result.vectors.k_bar_c,
        b: p.b,
        epsilon: wnl_result.vectors.epsilon_ctrl,
        regime: wnl_result.regime,
        sigma: wnl_result.sigma,
        ell: wnl_result.ell,
        a_inf: wnl_result.a_inf,
        fem: fem_summary,
        mse,
    };

    let mut written = Vec::new();
    if let Some(out) = &opts.out_dir {
        let dir = artifacts::experiment_dir(out, &cfg.name)?;
        written.extend(write_dispersion_pair(&dir, cfg, &prepared)?);
        let path = dir.join("profile.csv");
        artifacts::write_profile(&path, &nodes, final_state.as_ref(), pattern.as_ref())?;
        written.push(path);
        if !history.is_empty() {
            let path = dir.join("history.csv");
            artifacts::write_history(&path, &history)?;
            written.push(path);
        }
        let file = ReportFile {
            config: cfg,
            report: &report,
            params: p,
            reaction_matrix: prepared.stability.matrices.reaction,
            diffusion_matrix: prepared.stability.matrices.diffusion,
            stability: &prepared.stability,
            lotka_volterra: &prepared.lotka_volterra,
            ces_reaction: &prepared.ces_reaction,
            wnl: WnlSummary::from(&wnl_result),
        };
        let path = dir.join("report.json");
        artifacts::write_json(&path, &file)?;
        written.push(path);
    }

    Ok(RunOutput {
        prepared,
        wnl: wnl_result,
        report,
        final_state,
        pattern,
        artifacts: written,
    })
}

fn write_dispersion_pair(
    dir: &Path,
    cfg: &ExperimentConfig,
    prepared: &Prepared,
) -> Result<Vec<PathBuf>> {
    let b_c = prepared.critical.b_c;
    let labelled = [
        ("b_c".to_string(), b_c),
        ("b".to_string(), cfg.b_multiplier * b_c),
    ];
    artifacts::write_dispersion_set(dir, prepared, &labelled)
}

/// Dispersion curves `det(A_k)` and the growth rates for each `b`; by
/// default at `b_c` and `b_multiplier * b_c`.
pub fn dispersion_dump(
    cfg: &ExperimentConfig,
    bs: Option<&[f64]>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let dir = artifacts::experiment_dir(out_dir, &cfg.name)?;
    match bs {
        None => write_dispersion_pair(&dir, cfg, &prepared),
        Some(bs) => {
            let labelled: Vec<(String, f64)> = bs.iter().map(|&b| (format!("b{b}"), b)).collect();
            artifacts::write_dispersion_set(&dir, &prepared, &labelled)
        }
    }
}
