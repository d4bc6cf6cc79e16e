//! Flat-file outputs: CSV for curves and profiles, JSON for reports.

use std::fs;
use std::path::{Path, PathBuf};

use labcap_core::fem::Snapshot;
use labcap_core::stability;
use labcap_core::Field;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::pipeline::Prepared;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "LABCAP_OUT_DIR";

pub const DEFAULT_OUT_DIR: &str = "labcap-out";

pub fn resolve_out_dir(cli: Option<&Path>) -> PathBuf {
    match cli {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    }
}

pub fn experiment_dir(out: &Path, name: &str) -> Result<PathBuf> {
    let dir = out.join(name);
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(dir)
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    labor: Option<f64>,
    capital: Option<f64>,
    wnl_labor: Option<f64>,
    wnl_capital: Option<f64>,
}

/// Nodal FEM state next to the weakly nonlinear pattern; either may be
/// missing, leaving its columns empty.
pub fn write_profile(
    path: &Path,
    nodes: &[f64],
    fem: Option<&Field>,
    wnl: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<()> {
    let rows = nodes.iter().enumerate().map(|(i, &x)| ProfileRow {
        x,
        labor: fem.map(|f| f.labor[i]),
        capital: fem.map(|f| f.capital[i]),
        wnl_labor: wnl.map(|w| w.0[i]),
        wnl_capital: wnl.map(|w| w.1[i]),
    });
    write_rows(path, rows)
}

#[derive(Serialize)]
struct HistoryRow {
    t: f64,
    labor_min: f64,
    labor_max: f64,
    capital_min: f64,
    capital_max: f64,
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Range of each field at every stored snapshot.
pub fn write_history(path: &Path, snapshots: &[Snapshot<f64>]) -> Result<()> {
    let rows = snapshots.iter().map(|s| {
        let (labor_min, labor_max) = min_max(&s.field.labor);
        let (capital_min, capital_max) = min_max(&s.field.capital);
        HistoryRow {
            t: s.t,
            labor_min,
            labor_max,
            capital_min,
            capital_max,
        }
    });
    write_rows(path, rows)
}

#[derive(Serialize)]
struct DispersionRow {
    k: f64,
    det: f64,
    re_lambda1: f64,
    re_lambda2: f64,
}

/// One `dispersion_<label>.csv` per labelled `b`.
pub fn write_dispersion_set(
    dir: &Path,
    prepared: &Prepared,
    labelled: &[(String, f64)],
) -> Result<Vec<PathBuf>> {
    let ks = stability::default_k_grid(prepared.critical.k_c);
    let mut paths = Vec::with_capacity(labelled.len());
    for (label, b) in labelled {
        let curve = stability::dispersion(&prepared.params, &prepared.equilibrium, *b, &ks);
        let path = dir.join(format!("dispersion_{label}.csv"));
        write_rows(
            &path,
            curve.samples.iter().map(|s| DispersionRow {
                k: s.k,
                det: s.det,
                re_lambda1: s.re_lambda1,
                re_lambda2: s.re_lambda2,
            }),
        )?;
        paths.push(path);
    }
    Ok(paths)
}
