//! Reproduction table: derived quantities next to the published ones.

use std::fmt::Write as _;
use std::path::Path;

use labcap_core::wnl::Regime;
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts;
use crate::config::{ExperimentConfig, Printed, Reference};
use crate::error::{Result, Stage};
use crate::pipeline::{run_experiment, ComparisonReport, RunOptions};

/// How a derived value is compared with its published counterpart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    /// Equal at the printed precision.
    Printed,
    /// Within this relative deviation.
    Relative(f64),
    /// Within this multiplicative factor either way.
    Factor(f64),
}

pub const STEADY_TIME_TOLERANCE: Tolerance = Tolerance::Relative(0.25);
pub const MSE_TOLERANCE: Tolerance = Tolerance::Factor(2.0);

impl Tolerance {
    pub fn accepts(&self, derived: f64, reference: &Printed) -> bool {
        match *self {
            Tolerance::Printed => reference.matches(derived),
            Tolerance::Relative(r) => {
                (derived - reference.value).abs() <= r * reference.value.abs()
            }
            Tolerance::Factor(f) => {
                derived > 0.0 && reference.value > 0.0 && {
                    let ratio = derived / reference.value;
                    ratio <= f && ratio >= 1.0 / f
                }
            }
        }
    }
}

pub const COLUMNS: [&str; 10] = [
    "alpha1", "alpha2", "beta1", "beta2", "L*", "K*", "b_c", "k_c", "T_s", "MSE",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub column: &'static str,
    pub derived: Option<f64>,
    pub reference: Option<Printed>,
    /// `(derived - reference) / reference`.
    pub deviation: Option<f64>,
    pub tolerance: Tolerance,
    /// `None` when there is nothing to compare.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowStatus {
    Ok { regime: Regime },
    Failed { stage: Option<Stage>, error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub name: String,
    #[serde(flatten)]
    pub status: RowStatus,
    pub cells: Vec<Cell>,
}

impl TableRow {
    pub fn cell(&self, column: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.column == column)
    }

    /// Columns whose comparison failed.
    pub fn mismatches(&self) -> Vec<&'static str> {
        self.cells
            .iter()
            .filter(|c| c.pass == Some(false))
            .map(|c| c.column)
            .collect()
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, RowStatus::Failed { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn any_failed_row(&self) -> bool {
        self.rows.iter().any(TableRow::failed)
    }

    pub fn all_match(&self) -> bool {
        self.rows
            .iter()
            .all(|r| !r.failed() && r.mismatches().is_empty())
    }

    pub fn row(&self, name: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Plain text rendering, one block per row.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            match &row.status {
                RowStatus::Ok { regime } => {
                    let _ = writeln!(s, "{} ({regime:?})", row.name);
                }
                RowStatus::Failed { error, .. } => {
                    let _ = writeln!(s, "{} FAILED: {error}", row.name);
                    continue;
                }
            }
            let _ = writeln!(
                s,
                "  {:<7} {:>14} {:>10} {:>11}  status",
                "column", "derived", "published", "deviation"
            );
            for c in &row.cells {
                let derived = c.derived.map_or("-".into(), |v| format!("{v:.6}"));
                let reference = c.reference.map_or("-".into(), |v| v.to_string());
                let dev = c
                    .deviation
                    .map_or("-".into(), |v| format!("{:+.2}%", 100.0 * v));
                let status = match c.pass {
                    Some(true) => "ok",
                    Some(false) => "MISMATCH",
                    None => "",
                };
                let _ = writeln!(
                    s,
                    "  {:<7} {derived:>14} {reference:>10} {dev:>11}  {status}",
                    c.column
                );
            }
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::HarnessError::io(dir, e))?;
        artifacts::write_json(&dir.join("table1.json"), self)?;
        let mut w = csv::Writer::from_path(dir.join("table1.csv"))?;
        w.write_record([
            "experiment",
            "column",
            "derived",
            "published",
            "deviation",
            "pass",
        ])?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for row in &self.rows {
            for c in &row.cells {
                w.write_record([
                    row.name.clone(),
                    c.column.to_string(),
                    fmt(c.derived),
                    c.reference.map_or(String::new(), |p| p.value.to_string()),
                    fmt(c.deviation),
                    c.pass.map_or(String::new(), |p| p.to_string()),
                ])?;
            }
        }
        w.flush()
            .map_err(|e| crate::error::HarnessError::io(dir, e))?;
        Ok(())
    }
}

fn cell(
    column: &'static str,
    derived: Option<f64>,
    reference: Option<Printed>,
    tolerance: Tolerance,
) -> Cell {
    let (deviation, pass) = match (derived, reference) {
        (Some(d), Some(r)) => (
            (r.value != 0.0).then(|| (d - r.value) / r.value),
            Some(tolerance.accepts(d, &r)),
        ),
        _ => (None, None),
    };
    Cell {
        column,
        derived,
        reference,
        deviation,
        tolerance,
        pass,
    }
}

pub fn cells(report: &ComparisonReport, reference: &Reference) -> Vec<Cell> {
    let r = &report.reaction;
    let e = &report.equilibrium;
    vec![
        cell(
            "alpha1",
            Some(r.alpha1),
            reference.alpha1,
            Tolerance::Printed,
        ),
        cell(
            "alpha2",
            Some(r.alpha2),
            reference.alpha2,
            Tolerance::Printed,
        ),
        cell("beta1", Some(r.beta1), reference.beta1, Tolerance::Printed),
        cell("beta2", Some(r.beta2), reference.beta2, Tolerance::Printed),
        cell("L*", Some(e.labor), reference.labor, Tolerance::Printed),
        cell("K*", Some(e.capital), reference.capital, Tolerance::Printed),
        cell("b_c", Some(report.b_c), reference.b_c, Tolerance::Printed),
        cell("k_c", Some(report.k_c), reference.k_c, Tolerance::Printed),
        cell(
            "T_s",
            report.steady_time(),
            report.fem.as_ref().and(reference.steady_time),
            STEADY_TIME_TOLERANCE,
        ),
        cell("MSE", report.mse, reference.mse, MSE_TOLERANCE),
    ]
}

/// Evaluates each config independently; a failing row is recorded and the
/// rest of the table is still produced. With `fem` off the `T_s` and `MSE`
/// columns stay empty.
pub fn table1(configs: &[ExperimentConfig], fem: bool) -> Table {
    let opts = RunOptions { fem, out_dir: None };
    let rows = configs
        .par_iter()
        .map(|cfg| {
            let reference = cfg.reference.unwrap_or_default();
            match run_experiment(cfg, &opts) {
                Ok(out) => TableRow {
                    name: cfg.name.clone(),
                    status: RowStatus::Ok {
                        regime: out.report.regime,
                    },
                    cells: cells(&out.report, &reference),
                },
                Err(e) => TableRow {
                    name: cfg.name.clone(),
                    status: RowStatus::Failed {
                        stage: e.stage(),
                        error: e.to_string(),
                    },
                    cells: Vec::new(),
                },
            }
        })
        .collect();
    Table { rows }
}
