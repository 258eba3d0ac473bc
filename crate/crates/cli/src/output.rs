//! CSV and JSON artifacts. Reals are written with 17 significant digits so
//! that re-parsing reproduces them bit for bit.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use hp_robust::adaptivity::IterationRecord;
use hp_robust::estimator::{EfficiencyDiagnostics, ErrorEstimate};
use hp_robust::{HpMesh, HpSolution};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let err = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub n_elem: usize,
    pub n_dof: usize,
    pub max_p: usize,
    pub eta_total: f64,
    pub true_error: Option<f64>,
    pub efficiency: Option<f64>,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        TraceRow {
            iter: r.iteration,
            n_elem: r.n_elem,
            n_dof: r.n_dof,
            max_p: r.max_p,
            eta_total: r.eta_total,
            true_error: r.true_error,
            efficiency: r.efficiency,
        }
    }
}

pub const TRACE_HEADER: [&str; 7] = ["iter", "n_elem", "n_dof", "max_p", "eta_total", "true_error", "efficiency"];

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    write_rows(
        path,
        &TRACE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.iter.to_string(),
                r.n_elem.to_string(),
                r.n_dof.to_string(),
                r.max_p.to_string(),
                fmt_real(r.eta_total),
                fmt_opt(r.true_error),
                fmt_opt(r.efficiency),
            ]
        }),
    )
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<TraceRow>, _>>()
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Semilog plot series: estimate and true error against iteration and DOFs.
pub fn write_series(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    write_rows(
        path,
        &["iter", "n_dof", "eta_total", "true_error"],
        rows.iter()
            .map(|r| vec![r.iter.to_string(), r.n_dof.to_string(), fmt_real(r.eta_total), fmt_opt(r.true_error)]),
    )
}

/// hp-mesh bars: one record per element.
pub fn write_mesh(path: &Path, mesh: &HpMesh) -> Result<(), CliError> {
    write_rows(
        path,
        &["element", "x_left", "x_right", "p"],
        mesh.records().enumerate().map(|(j, r)| {
            vec![j.to_string(), fmt_real(r.x_left), fmt_real(r.x_right), r.degree.to_string()]
        }),
    )
}

pub fn write_indicators(path: &Path, mesh: &HpMesh, est: &ErrorEstimate) -> Result<(), CliError> {
    write_rows(
        path,
        &[
            "element",
            "x_left",
            "x_right",
            "p",
            "eta_sq",
            "alpha",
            "residual_part",
            "oscillation_part",
            "jump_left",
            "jump_right",
        ],
        mesh.records().zip(&est.indicators).enumerate().map(|(j, (r, ind))| {
            vec![
                j.to_string(),
                fmt_real(r.x_left),
                fmt_real(r.x_right),
                r.degree.to_string(),
                fmt_real(ind.eta_sq),
                fmt_real(ind.alpha),
                fmt_real(ind.residual_part),
                fmt_real(ind.oscillation_part),
                fmt_real(ind.jump_left),
                fmt_real(ind.jump_right),
            ]
        }),
    )
}

/// `(x, u_hp(x))` at `per_element` points per element, ends included.
pub fn write_solution(path: &Path, solution: &HpSolution, per_element: usize) -> Result<(), CliError> {
    write_rows(
        path,
        &["x", "u"],
        solution.sample(per_element).into_iter().map(|(x, u)| vec![fmt_real(x), fmt_real(u)]),
    )
}

/// Diagnostics of one iteration. Volume ratios are indexed by element, jump
/// ratios by interior node; flagged ratios are left empty.
pub fn diagnostic_rows(iter: usize, diag: &EfficiencyDiagnostics) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (j, (r, osc)) in diag.volume_ratios.iter().zip(&diag.oscillation).enumerate() {
        rows.push(vec![iter.to_string(), "volume".into(), j.to_string(), fmt_real(*osc), fmt_opt(*r)]);
    }
    for (i, r) in diag.jump_ratios.iter().enumerate() {
        rows.push(vec![iter.to_string(), "jump".into(), (i + 1).to_string(), String::new(), fmt_opt(*r)]);
    }
    rows
}

pub fn write_diagnostics(path: &Path, rows: Vec<Vec<String>>) -> Result<(), CliError> {
    write_rows(path, &["iter", "kind", "index", "oscillation", "ratio"], rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}
