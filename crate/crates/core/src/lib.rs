//! Labor/capital reaction-cross-diffusion model.
//!
//! The pipeline runs from a CES production function to Lotka-Volterra
//! reaction coefficients ([`ces`]), through the rescaled PDE ([`model`]),
//! its Turing analysis ([`stability`]) and weakly nonlinear amplitude
//! ([`wnl`]), to a finite element simulation of the full system ([`fem`]).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod ces;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod stability;
pub mod wnl;

pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
pub use scalar::Real;

pub type Ces = ces::CesParams<f64>;
pub type Prices = ces::FactorPrices<f64>;
pub type LotkaVolterra = ces::LotkaVolterraCoeffs<f64>;
pub type ScaledModel = model::ScaledModelParams<f64>;
pub type Equilibrium = model::Equilibrium<f64>;
pub type CriticalPoint = stability::CriticalPoint<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
pub type WnlVectors = wnl::WnlVectors<f64>;
pub type WnlResult = wnl::WnlResult<f64>;
pub type Grid = fem::Grid<f64>;
pub type Field = fem::Field<f64>;
pub type SolverConfig = fem::SolverConfig<f64>;
pub type Trajectory = fem::Trajectory<f64>;

pub type ScaledModelF32 = model::ScaledModelParams<f32>;
pub type GridF32 = fem::Grid<f32>;
pub type FieldF32 = fem::Field<f32>;
