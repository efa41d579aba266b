//! CSV traces and TOML run summaries.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use vmfb_core::fb::SolveTrace;
use vmfb_core::schedules::ValidationReport;

use crate::error::CliError;

pub const TRACE_COLUMNS: [&str; 8] = [
    "n",
    "residual",
    "gamma",
    "lambda",
    "fejer_lhs",
    "fejer_rhs",
    "b_drift_partial_sum",
    "wall_clock_ns",
];

/// Full-precision float formatting (17 significant digits, `.` decimal separator).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_trace<W: Write>(trace: &SolveTrace, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.residual),
            fmt_f64(r.gamma),
            fmt_f64(r.lambda),
            fmt_opt(r.fejer_lhs),
            fmt_opt(r.fejer_rhs),
            fmt_opt(r.b_drift),
            r.wall_clock_ns.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Io("trace".into(), e))?;
    Ok(())
}

pub fn write_trace_file(trace: &SolveTrace, path: &Path) -> Result<(), CliError> {
    let f = std::fs::File::create(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    write_trace(trace, std::io::BufWriter::new(f))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub detail: String,
}

pub fn check_summaries(report: &ValidationReport) -> Vec<CheckSummary> {
    report
        .checks
        .iter()
        .map(|c| CheckSummary {
            name: c.name.clone(),
            passed: c.passed,
            margin: c.margin,
            index: c.index,
            detail: c.detail.clone(),
        })
        .collect()
}

/// Run summary written next to the trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub solver: String,
    pub seed: u64,
    pub policy: String,
    pub termination: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub wall_time_s: f64,
    pub validation_passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_fejer_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_to_reference: Option<f64>,
    pub solution: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dual_solution: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    pub assumptions: Vec<String>,
    pub checks: Vec<CheckSummary>,
}

pub fn write_summary_file(summary: &Summary, path: &Path) -> Result<(), CliError> {
    let text = toml::to_string(summary).map_err(|e| CliError::Serialize(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}
