//! Experiment runner for the labor/capital model: configs and builtin
//! presets, the end-to-end pipeline with its artifacts, the reproduction
//! table, dispersion dumps and parameter sweeps.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod presets;
pub mod sweep;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result, Stage};
pub use pipeline::{dispersion_dump, run_experiment, ComparisonReport, RunOptions, RunOutput};
pub use table::{table1, Table};
