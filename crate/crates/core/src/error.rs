use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no admissible coexistence equilibrium: beta1*beta2 = {product} <= 1")]
    NoEquilibrium { product: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("singular {what} (pivot/determinant {det:e})")]
    Singular { what: &'static str, det: f64 },

    #[error("input is not at criticality: null residual {residual:e} exceeds {tolerance:e}")]
    NotCritical { residual: f64, tolerance: f64 },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last change {residual:e})")]
    FixedPointNonConvergence { iterations: usize, residual: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("subcritical bifurcation (Landau constant {ell}): the cubic amplitude equation gives no amplitude")]
    Subcritical { ell: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}
