//! report.json, table.csv and plot.dat.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::tasks::Table;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON form of the validated config (seed included).
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&canonical).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub setup_seconds: f64,
    pub task_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub version: &'static str,
    pub config_hash: &'a str,
    pub config: &'a ExperimentConfig,
    pub task: &'static str,
    /// `ok` or `numerical-failure`.
    pub status: &'static str,
    pub error: Option<String>,
    pub results: Value,
    pub diagnostics: Value,
    /// Wall-clock times; the only part of the report that varies between runs.
    pub timing: Timing,
}

fn header(hash: &str) -> String {
    format!("# pphi2 {VERSION} config-hash {hash}\n")
}

/// Shortest round-trip form; scientific notation outside `[1e−4, 1e6)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_report(dir: &Path, report: &RunReport) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)
}

pub fn write_table(dir: &Path, hash: &str, table: &Table) -> io::Result<()> {
    let mut s = header(hash);
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(format_number).unwrap_or_default()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    fs::write(dir.join("table.csv"), s)
}

pub fn write_plot(dir: &Path, hash: &str, labels: (&str, &str), points: &[(f64, f64)]) -> io::Result<()> {
    let mut s = header(hash);
    let _ = writeln!(s, "# {} {}", labels.0, labels.1);
    for (x, y) in points {
        let _ = writeln!(s, "{} {}", format_number(*x), format_number(*y));
    }
    fs::write(dir.join("plot.dat"), s)
}
