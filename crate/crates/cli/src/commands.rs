use qfi_core::par;
use qfi_core::pauli::DEFAULT_DENSE_LIMIT;

use crate::config::{ControlKind, Scenario, SystemKind};
use crate::error::{CliError, CliResult};
use crate::report::{sha256_hex, OptimizeSummary, Provenance, RunReport};
use crate::scenario::{build, optimize_point, run_point, Built, PointRecord};

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| v.is_nan() || *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn provenance(s: &Scenario, canonical: &str, records: &[PointRecord], built: &Built) -> Provenance {
    Provenance {
        config_sha256: sha256_hex(canonical),
        seed: s.seed,
        steps: records.iter().map(|r| r.steps).collect(),
        omega: built.drive.as_ref().map(|d| d.omega()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        worker_threads: par::threads(),
    }
}

/// QFI against probe time.
pub fn sweep_time(s: &Scenario, canonical: &str) -> CliResult<RunReport> {
    let built = build(s, None)?;
    let values = s.times()?;
    let records = par::map(&values, |v| run_point(s, &built, *v))
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    Ok(RunReport {
        command: "sweep-time".into(),
        scenario: s.name.clone(),
        qfi_convention: s.qfi_convention.clone(),
        provenance: provenance(s, canonical, &records, &built),
        records,
        fitted_exponent: None,
        truncation_bound_heuristic: built.truncation_bound,
        optimize: None,
        warnings: built.warnings.clone(),
    })
}

fn single_time(s: &Scenario) -> CliResult<f64> {
    match s.times()?.as_slice() {
        [t] => Ok(*t),
        other => Err(CliError::Config(format!(
            "this command takes a single probe time, got {} values",
            other.len()
        ))),
    }
}

/// QFI against chain length at a fixed probe time, with the fitted
/// log-log exponent.
pub fn sweep_n(s: &Scenario, canonical: &str) -> CliResult<RunReport> {
    if s.system.kind != SystemKind::Chain {
        return Err(CliError::Config("sweep-n needs a chain system".into()));
    }
    let ns = s
        .grid
        .n
        .clone()
        .ok_or_else(|| CliError::Config("sweep-n needs grid.n".into()))?;
    if let Some(&bad) = ns.iter().find(|&&n| n == 0 || n > DEFAULT_DENSE_LIMIT) {
        return Err(qfi_core::Error::Capacity {
            n_sites: bad,
            limit: DEFAULT_DENSE_LIMIT,
        }
        .into());
    }
    let t = single_time(s)?;
    let builds = ns.iter().map(|&n| build(s, Some(n))).collect::<CliResult<Vec<_>>>()?;
    let mut records = par::map(&builds, |b| run_point(s, b, t))
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;
    for (r, n) in records.iter_mut().zip(&ns) {
        r.sweep_value = *n as f64;
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = records.iter().map(|r| r.qfi).collect();
    let mut warnings: Vec<String> = Vec::new();
    for b in &builds {
        for w in &b.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    let last = builds.last().expect("grid.n is non-empty");
    Ok(RunReport {
        command: "sweep-n".into(),
        scenario: s.name.clone(),
        qfi_convention: s.qfi_convention.clone(),
        provenance: provenance(s, canonical, &records, last),
        fitted_exponent: fit_exponent(&x, &y),
        records,
        truncation_bound_heuristic: builds.iter().filter_map(|b| b.truncation_bound).reduce(f64::max),
        optimize: None,
        warnings,
    })
}

/// Restricted optimization at a single probe time. Returns the report and
/// the coefficient rows `(τ, c_1, ...)`.
pub fn optimize(s: &Scenario, canonical: &str) -> CliResult<(RunReport, Vec<Vec<f64>>)> {
    if s.control.kind != ControlKind::Restricted {
        return Err(CliError::Config("optimize needs control.kind = \"restricted\"".into()));
    }
    let built = build(s, None)?;
    let t = single_time(s)?;
    let run = optimize_point(s, &built, t)?;
    let out = &run.outcome;
    let summary = OptimizeSummary {
        baseline_qfi: run.baseline_qfi,
        final_qfi: out.final_qfi,
        unrestricted_bound: run.bound,
        iterations: out.iterations,
        converged: out.converged,
        history: out.history.clone(),
        frozen_iterations: out.frozen_iterations.clone(),
        gradcheck_max_deviation: run.gradcheck_max_deviation,
        residual_max: run.residual_max,
        basis: out.problem.basis.labels().to_vec(),
    };
    let rows = out.problem.coefficient_rows();
    let records = vec![run.record.clone()];
    Ok((
        RunReport {
            command: "optimize".into(),
            scenario: s.name.clone(),
            qfi_convention: s.qfi_convention.clone(),
            provenance: provenance(s, canonical, &records, &built),
            records,
            fitted_exponent: None,
            truncation_bound_heuristic: built.truncation_bound,
            optimize: Some(summary),
            warnings: built.warnings.clone(),
        },
        rows,
    ))
}
