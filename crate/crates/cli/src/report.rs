//! CSV, JSON and plotting-script output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;
use crate::scenario::PointRecord;

pub const CSV_HEADER: [&str; 8] = [
    "sweep_value",
    "qfi",
    "qfi_ratio",
    "mu_plus",
    "mu_minus",
    "residual_max",
    "steps",
    "wall_ms",
];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub steps: Vec<usize>,
    pub omega: Option<f64>,
    pub tool_version: String,
    pub worker_threads: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OptimizeSummary {
    pub baseline_qfi: f64,
    pub final_qfi: f64,
    pub unrestricted_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    pub frozen_iterations: Vec<usize>,
    pub gradcheck_max_deviation: f64,
    pub residual_max: f64,
    pub basis: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub scenario: String,
    pub qfi_convention: String,
    pub records: Vec<PointRecord>,
    pub fitted_exponent: Option<f64>,
    /// Nested-commutator estimate of the dropped second-order Floquet terms
    /// (heuristic).
    pub truncation_bound_heuristic: Option<f64>,
    pub optimize: Option<OptimizeSummary>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Sweep table in the fixed column order. Timing is the only field that may
/// differ between identical runs.
pub fn write_csv<W: Write>(out: W, records: &[PointRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            num(r.sweep_value),
            num(r.qfi),
            num(r.qfi_ratio),
            num(r.mu_plus),
            num(r.mu_minus),
            r.residual_max.map(num).unwrap_or_default(),
            r.steps.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[PointRecord]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// `tau,c_1,...,c_d` rows.
pub fn write_coefficients<W: Write>(out: W, rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = rows.first().map(|r| r.len().saturating_sub(1)).unwrap_or(0);
    let mut header = vec!["tau".to_string()];
    header.extend((1..=d).map(|i| format!("c_{i}")));
    w.write_record(&header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Matplotlib script that reads the CSV written next to it.
pub fn plot_script(command: &str, title: &str) -> String {
    let (x_label, loglog) = match command {
        "sweep-n" => ("n", true),
        "optimize" => ("t_f", false),
        _ => ("sweep value", false),
    };
    format!(
        r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("sweep.csv")))
x = [float(r["sweep_value"]) for r in rows]
qfi = [float(r["qfi"]) for r in rows]
ratio = [float(r["qfi_ratio"]) for r in rows]

fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
a.plot(x, qfi, "o-")
a.set_xlabel("{x_label}")
a.set_ylabel("QFI")
{scale}
b.plot(x, ratio, "s-")
b.axhline(1.0, color="gray", lw=0.5)
b.set_xlabel("{x_label}")
b.set_ylabel("QFI / unrestricted maximum")
fig.suptitle("{title}")
fig.tight_layout()
fig.savefig("sweep.png", dpi=150)
"#,
        scale = if loglog {
            "a.set_xscale(\"log\")\na.set_yscale(\"log\")"
        } else {
            ""
        },
    )
}

/// Writes `sweep.csv`, `report.json` and `plot.py` into `dir`.
pub fn write_bundle(dir: &Path, report: &RunReport) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(std::fs::File::create(dir.join("sweep.csv"))?, &report.records)?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    std::fs::write(dir.join("plot.py"), plot_script(&report.command, &report.scenario))?;
    Ok(())
}
