//! The four builtin experiments.

use labcap_core::ces::Convention;
use labcap_core::model::ReactionCoeffs;
use labcap_core::wnl::Normalization;
use labcap_core::SolverConfig;

use crate::config::{CesConfig, DiffusionConfig, ExperimentConfig, GridConfig, Printed, Reference};

pub const PRESET_NAMES: [&str; 4] = ["exp1", "exp2", "exp3", "exp4"];

fn printed(s: &str) -> Option<Printed> {
    Printed::parse(s)
}

#[allow(clippy::too_many_arguments)]
fn ces(a: f64, alpha: f64, beta: f64, eps: f64, eta: f64, w: f64, r: f64) -> Option<CesConfig> {
    Some(CesConfig {
        productivity: a,
        capital_share: alpha,
        labor_share: beta,
        returns: eps,
        substitution: eta,
        wage: w,
        rental: r,
        convention: Convention::Published,
    })
}

fn reference(cols: [&str; 10]) -> Option<Reference> {
    let c = cols.map(|s| if s.is_empty() { None } else { printed(s) });
    Some(Reference {
        alpha1: c[0],
        alpha2: c[1],
        beta1: c[2],
        beta2: c[3],
        labor: c[4],
        capital: c[5],
        b_c: c[6],
        k_c: c[7],
        steady_time: c[8],
        mse: c[9],
    })
}

fn base(name: &str, gamma: f64, c: f64, a1: f64, a2: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        ces: None,
        reaction: None,
        diffusion: DiffusionConfig::Scaled {
            c1: c,
            c2: c,
            a1,
            a2,
        },
        gamma,
        b_multiplier: 1.01,
        saturation_factor: 10.0,
        normalization: Normalization::Threshold,
        solver: SolverConfig::default(),
        grid: GridConfig::default(),
        reference: None,
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let cfg = match name {
        "exp1" => ExperimentConfig {
            ces: ces(1.0, 0.3, 0.6, 0.5, 0.2, 1.0, 0.3),
            reference: reference([
                "0.5", "0.15", "2.35", "2.47", "0.29", "0.18", "1.56", "3.99", "1557", "1.7e-2",
            ]),
            ..base(name, 1.0, 0.01, 0.3, 3e-4)
        },
        "exp2" => ExperimentConfig {
            ces: ces(1.0, 0.3, 0.6, 0.5, 0.2, 0.4, 0.3),
            reference: reference([
                "0.2", "0.15", "0.48", "8.38", "0.6", "0.09", "0.42", "6", "1630", "1.4e-2",
            ]),
            ..base(name, 1.0, 0.01, 7e-3, 0.01)
        },
        "exp3" => ExperimentConfig {
            ces: ces(100.0, 0.29, 0.3, 0.75, 0.1, 0.95, 0.95),
            reference: reference([
                "0.24", "0.24", "0.66", "1.97", "2.35", "1.31", "1.14", "4.02", "240", "4.7e-2",
            ]),
            ..base(name, 5.0, 0.1, 0.41, 2.4)
        },
        // The printed CES inputs and reaction coefficients of this row do not
        // agree with each other; the run uses the reaction coefficients.
        "exp4" => ExperimentConfig {
            ces: ces(1.0, 0.3, 0.6, 0.5, 0.2, 0.4, 0.5),
            reaction: Some(ReactionCoeffs {
                alpha1: 0.05,
                alpha2: 0.15,
                beta1: 0.045,
                beta2: 54.0,
            }),
            reference: reference([
                "0.05", "0.15", "4.5e-2", "5.4", "1.96", "0.03", "205.9", "3.51", "5000", "",
            ]),
            ..base(name, 10.0, 0.01, 3.72, 2.7e-5)
        },
        _ => return None,
    };
    Some(cfg)
}

pub fn all_presets() -> Vec<ExperimentConfig> {
    PRESET_NAMES.iter().filter_map(|n| preset(n)).collect()
}
