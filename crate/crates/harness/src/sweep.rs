//! One-parameter sweeps run in parallel.

use std::path::{Path, PathBuf};

use labcap_core::wnl::Regime;
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts;
use crate::config::{DiffusionConfig, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::pipeline::{run_experiment, RunOptions};

/// Names accepted by [`apply_param`].
pub const PARAMS: [&str; 24] = [
    "gamma",
    "b_multiplier",
    "saturation_factor",
    "c1",
    "c2",
    "a1",
    "a2",
    "a11",
    "a22",
    "tau",
    "tol_fp",
    "tol_s",
    "nodes",
    "productivity",
    "capital_share",
    "labor_share",
    "returns",
    "substitution",
    "wage",
    "rental",
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
];

/// Parses `a:b:n` into `n` evenly spaced values from `a` to `b`.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || HarnessError::config(format!("range `{s}` is not of the form a:b:n"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

pub fn apply_param(cfg: &mut ExperimentConfig, name: &str, value: f64) -> Result<()> {
    let missing = |what: &str| {
        HarnessError::config(format!("`{name}` needs a [{what}] block in `{}`", cfg.name))
    };
    match name {
        "gamma" => cfg.gamma = value,
        "b_multiplier" => cfg.b_multiplier = value,
        "saturation_factor" => cfg.saturation_factor = value,
        "tau" => cfg.solver.tau = value,
        "tol_fp" => cfg.solver.tol_fp = value,
        "tol_s" => cfg.solver.tol_s = value,
        "nodes" => {
            if value.fract() != 0.0 || value < 3.0 {
                return Err(HarnessError::config(format!(
                    "nodes must be an integer >= 3, got {value}"
                )));
            }
            cfg.grid.nodes = value as usize;
        }
        "c1" | "c2" | "a1" | "a2" | "a11" | "a22" => {
            let slot = match (&mut cfg.diffusion, name) {
                (DiffusionConfig::Scaled { c1, .. } | DiffusionConfig::Raw { c1, .. }, "c1") => c1,
                (DiffusionConfig::Scaled { c2, .. } | DiffusionConfig::Raw { c2, .. }, "c2") => c2,
                (DiffusionConfig::Scaled { a1, .. }, "a1") => a1,
                (DiffusionConfig::Scaled { a2, .. }, "a2") => a2,
                (DiffusionConfig::Raw { a11, .. }, "a11") => a11,
                (DiffusionConfig::Raw { a22, .. }, "a22") => a22,
                _ => {
                    return Err(HarnessError::config(format!(
                        "`{name}` does not apply to the diffusion coefficients of `{}`",
                        cfg.name
                    )))
                }
            };
            *slot = value;
        }
        "alpha1" | "alpha2" | "beta1" | "beta2" => {
            let r = cfg.reaction.as_mut().ok_or_else(|| missing("reaction"))?;
            *match name {
                "alpha1" => &mut r.alpha1,
                "alpha2" => &mut r.alpha2,
                "beta1" => &mut r.beta1,
                _ => &mut r.beta2,
            } = value;
        }
        "productivity" | "capital_share" | "labor_share" | "returns" | "substitution" | "wage"
        | "rental" => {
            let c = cfg.ces.as_mut().ok_or_else(|| missing("ces"))?;
            *match name {
                "productivity" => &mut c.productivity,
                "capital_share" => &mut c.capital_share,
                "labor_share" => &mut c.labor_share,
                "returns" => &mut c.returns,
                "substitution" => &mut c.substitution,
                "wage" => &mut c.wage,
                _ => &mut c.rental,
            } = value;
        }
        _ => {
            return Err(HarnessError::config(format!(
                "unknown sweep parameter `{name}` (known: {})",
                PARAMS.join(", ")
            )))
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub b_c: Option<f64>,
    pub k_c: Option<f64>,
    pub regime: Option<Regime>,
    pub sigma: Option<f64>,
    pub ell: Option<f64>,
    pub steady_time: Option<f64>,
    pub dominant_mode: Option<f64>,
    pub mse: Option<f64>,
    pub error: Option<String>,
}

/// Runs `cfg` once per value of `param`, each into its own directory under
/// `<out_dir>/<name>_sweep_<param>/`, and writes `sweep.csv` there.
pub fn sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
    fem: bool,
    out_dir: &Path,
) -> Result<(PathBuf, Vec<SweepRow>)> {
    cfg.validate()?;
    let mut variants = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let mut c = cfg.clone();
        apply_param(&mut c, param, v)?;
        c.name = format!("{i:03}");
        variants.push(c);
    }
    let dir = artifacts::experiment_dir(out_dir, &format!("{}_sweep_{param}", cfg.name))?;
    let rows: Vec<SweepRow> = variants
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(index, (c, &value))| {
            let opts = RunOptions {
                fem,
                out_dir: Some(dir.clone()),
            };
            match run_experiment(c, &opts) {
                Ok(out) => {
                    let r = out.report;
                    SweepRow {
                        index,
                        value,
                        b_c: Some(r.b_c),
                        k_c: Some(r.k_c),
                        regime: Some(r.regime),
                        sigma: Some(r.sigma),
                        ell: Some(r.ell),
                        steady_time: r.steady_time(),
                        dominant_mode: r.dominant_mode(),
                        mse: r.mse,
                        error: None,
                    }
                }
                Err(e) => SweepRow {
                    index,
                    value,
                    b_c: None,
                    k_c: None,
                    regime: None,
                    sigma: None,
                    ell: None,
                    steady_time: None,
                    dominant_mode: None,
                    mse: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))?;
    Ok((path, rows))
}
