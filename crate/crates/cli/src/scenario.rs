//! Turns a [`Scenario`] into schedules and evaluates single sweep points.

use std::time::Instant;

use qfi_core::controls::{
    gradient_check, optimality_residual, pang_jordan_control, problem_adjoint, variational_optimize, ControlBasis,
    ControlProblem, OptimizeOptions, OptimizeOutcome,
};
use qfi_core::dynamics::{
    generator_with, normalized_ratio, propagate_with, qfi, unrestricted_bound, GeneratorSpectrum, HamiltonianSchedule,
    PropagateOptions, QfiConvention, Storage,
};
use qfi_core::floquet::{
    afm_frequency_chain, afm_frequency_qubit, chain_drive, effective_hamiltonian, qubit_drive, static_counter_control,
    validity_warning, HarmonicDrive,
};
use qfi_core::linalg::CVector;
use qfi_core::pauli::{BoundaryCondition, Letter, PauliOperator, SpinChain, DEFAULT_DENSE_LIMIT};
use qfi_core::Complex64;
use serde::Serialize;

use crate::config::{
    ControlKind, InitialState, Scenario, SystemKind, DEFAULT_STEPS_PER_PERIOD, DEFAULT_STEPS_PER_UNIT_TIME,
};
use crate::error::{CliError, CliResult};

/// Ratios above this in a report indicate a numerical fault.
pub const RATIO_CEILING: f64 = 1.0 + 1e-9;

/// Schedule and drive for one system size.
#[derive(Debug, Clone)]
pub struct Built {
    pub n_sites: usize,
    /// `H_λ`, plus the drive and static counter-control for Floquet runs.
    pub schedule: HamiltonianSchedule,
    pub drive: Option<HarmonicDrive>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub truncation_bound: Option<f64>,
    pub warnings: Vec<String>,
}

fn harmonic_number(l: usize) -> f64 {
    (1..=l).map(|k| 1.0 / k as f64).sum()
}

/// Matching frequency for equal-length amplitude lists.
pub fn afm_omega(kind: SystemKind, first: &[f64], second: &[f64], delta: f64) -> qfi_core::Result<f64> {
    match kind {
        SystemKind::Qubit => {
            let cy: Vec<Complex64> = first.iter().map(|c| Complex64::new(*c, 0.0)).collect();
            let cz: Vec<Complex64> = second.iter().map(|c| Complex64::new(0.0, -*c)).collect();
            afm_frequency_qubit(&cy, &cz, delta)
        }
        SystemKind::Chain => afm_frequency_chain(first, second, delta),
    }
}

pub fn convention(s: &Scenario) -> CliResult<QfiConvention> {
    Ok(QfiConvention::parse(&s.qfi_convention)?)
}

pub fn boundary(s: &Scenario) -> CliResult<BoundaryCondition> {
    Ok(BoundaryCondition::parse(&s.system.bc)?)
}

pub fn build(s: &Scenario, n_override: Option<usize>) -> CliResult<Built> {
    let sys = &s.system;
    let n = n_override.unwrap_or(sys.n);
    if n == 0 || n > DEFAULT_DENSE_LIMIT {
        return Err(qfi_core::Error::Capacity {
            n_sites: n,
            limit: DEFAULT_DENSE_LIMIT,
        }
        .into());
    }
    let bc = boundary(s)?;
    let (base, h_static) = match sys.kind {
        SystemKind::Qubit => {
            let sched = HamiltonianSchedule::qubit(sys.lambda, sys.delta);
            let h = sched.hamiltonian_lambda(0.0);
            (sched, h)
        }
        SystemKind::Chain => {
            let chain = SpinChain::new(n, sys.j, sys.delta, bc)?;
            (
                HamiltonianSchedule::chain(&chain, sys.lambda),
                chain.hamiltonian(sys.lambda),
            )
        }
    };
    let mut built = Built {
        n_sites: n,
        schedule: base,
        drive: None,
        first: Vec::new(),
        second: Vec::new(),
        truncation_bound: None,
        warnings: Vec::new(),
    };
    if s.control.kind != ControlKind::Floquet {
        return Ok(built);
    }

    let c = &s.control;
    let (first, second, omega) = match (&c.first, &c.second, c.omega) {
        (Some(a), Some(b), Some(w)) => (a.clone(), b.clone(), w),
        (Some(a), Some(b), None) => {
            let w = afm_omega(sys.kind, a, b, sys.delta)?;
            (a.clone(), b.clone(), w)
        }
        (None, None, Some(w)) => {
            // Equal amplitudes on every harmonic, sized to satisfy AFM at w.
            let l = c.harmonics.unwrap_or(5);
            if l == 0 {
                return Err(CliError::Config("control.harmonics must be at least 1".into()));
            }
            if sys.delta <= 0.0 {
                return Err(CliError::Config(
                    "amplitudes can only be derived from omega for delta > 0".into(),
                ));
            }
            let amp = (w * sys.delta / (8.0 * harmonic_number(l))).sqrt();
            (vec![amp; l], vec![amp; l], w)
        }
        _ => {
            return Err(CliError::Config(
                "floquet control needs first and second amplitudes, omega, or both".into(),
            ))
        }
    };
    if first.len() != second.len() {
        return Err(CliError::Config(
            "control.first and control.second differ in length".into(),
        ));
    }
    let drive = match sys.kind {
        SystemKind::Qubit => qubit_drive(&first, &second, omega)?,
        SystemKind::Chain => chain_drive(&first, &second, omega, n, bc)?,
    };
    let mut schedule = built.schedule.with_drive(drive.clone());
    let counter = c.counter_control.unwrap_or(sys.kind == SystemKind::Chain);
    if counter {
        let sensing = schedule.sensing_at(0.0);
        let hc0 = static_counter_control(&h_static, &sensing, |t| t.weight() == 2)?;
        schedule = schedule.with_static_control(hc0);
    }
    let model = effective_hamiltonian(&(&h_static + &schedule.static_control), &drive)?;
    if let Some(w) = validity_warning(omega, sys.lambda, sys.delta, &drive) {
        built.warnings.push(w);
    }
    built.schedule = schedule;
    built.drive = Some(drive);
    built.first = first;
    built.second = second;
    built.truncation_bound = Some(model.truncation_bound);
    Ok(built)
}

/// `(t_f, steps)` for a sweep value.
pub fn grid_point(s: &Scenario, built: &Built, value: f64) -> CliResult<(f64, usize)> {
    let g = &s.grid;
    if let Some(d) = &built.drive {
        let spp = g.steps_per_period.unwrap_or(DEFAULT_STEPS_PER_PERIOD);
        if g.periods.is_some() {
            let t = value * d.period();
            let steps = g.steps.unwrap_or((value * spp as f64).round() as usize);
            return Ok((t, if value == 0.0 { 0 } else { steps.max(1) }));
        }
        let steps = g.steps.unwrap_or((value / d.period() * spp as f64).ceil() as usize);
        return Ok((value, if value == 0.0 { 0 } else { steps.max(1) }));
    }
    if value == 0.0 {
        return Ok((0.0, 0));
    }
    let spu = g.steps_per_unit_time.unwrap_or(DEFAULT_STEPS_PER_UNIT_TIME);
    Ok((value, g.steps.unwrap_or((value * spu).ceil() as usize).max(1)))
}

pub fn options(s: &Scenario, storage: Storage) -> PropagateOptions {
    PropagateOptions {
        storage,
        allow_undersampled: s.grid.allow_undersampled.unwrap_or(false),
        ..Default::default()
    }
}

/// Explicit basis from the config, if any.
pub fn configured_basis(s: &Scenario, n: usize) -> CliResult<Option<ControlBasis>> {
    let c = &s.control;
    if let Some(labels) = &c.basis {
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        return Ok(Some(ControlBasis::from_labels(n, &refs)?));
    }
    match c.basis_preset.as_deref() {
        None => Ok(None),
        Some("single_site") => Ok(Some(ControlBasis::single_site(n, &Letter::ALL)?)),
        Some("local_two_body") => Ok(Some(ControlBasis::local_two_body(n, boundary(s)?)?)),
        Some(other) => Err(CliError::Config(format!(
            "unknown basis_preset {other:?} (single_site or local_two_body)"
        ))),
    }
}

pub fn initial_state(kind: InitialState, n: usize) -> Option<CVector> {
    let dim = 1usize << n;
    match kind {
        InitialState::Optimal => None,
        InitialState::Ghz => {
            let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let mut v = CVector::zeros(dim);
            v[0] += a;
            v[dim - 1] += a;
            Some(v)
        }
        InitialState::Plus => Some(CVector::from_element(
            dim,
            Complex64::new((dim as f64).sqrt().recip(), 0.0),
        )),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PulseRecord {
    pub time: f64,
    pub strength: f64,
    /// Pauli expansion of the pulse generator when small enough to expand.
    pub generator: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PointRecord {
    pub sweep_value: f64,
    pub t_f: f64,
    pub qfi: f64,
    pub qfi_ratio: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub residual_max: Option<f64>,
    pub steps: usize,
    pub wall_ms: f64,
    pub delta_pulses: Vec<PulseRecord>,
}

fn score(spec: &GeneratorSpectrum, state: Option<&CVector>) -> CliResult<f64> {
    match state {
        None => Ok(spec.max_qfi()),
        Some(psi) => Ok(qfi(spec, psi)?),
    }
}

fn checked_ratio(q: f64, bound: f64, at: f64) -> CliResult<f64> {
    let r = normalized_ratio(q, bound);
    if r.is_nan() || !(0.0..=RATIO_CEILING).contains(&r) {
        return Err(CliError::Numerical(format!(
            "normalized ratio {r} at sweep value {at} is outside [0, 1 + 1e-9]"
        )));
    }
    Ok(r)
}

/// Optimizer settings from the config.
pub fn optimize_options(s: &Scenario) -> OptimizeOptions {
    let d = OptimizeOptions::default();
    OptimizeOptions {
        iterations: s.control.iterations.unwrap_or(d.iterations),
        initial_step: s.control.initial_step.unwrap_or(d.initial_step),
        convergence_tolerance: s.control.convergence_tolerance.unwrap_or(d.convergence_tolerance),
        ..d
    }
}

pub fn restricted_problem(s: &Scenario, built: &Built, t_f: f64, steps: usize) -> CliResult<ControlProblem> {
    let basis = configured_basis(s, built.n_sites)?
        .ok_or_else(|| CliError::Config("restricted control needs control.basis or control.basis_preset".into()))?;
    let mut p = ControlProblem::new(built.schedule.clone(), basis, t_f, steps)?
        .with_convention(convention(s)?)
        .with_options(options(s, Storage::Full));
    if let Some(psi) = initial_state(s.system.initial_state, built.n_sites) {
        p = p.with_policy(qfi_core::controls::InitialStatePolicy::Fixed(psi));
    }
    let amp = s.control.init_amplitude.unwrap_or(0.0);
    if amp != 0.0 {
        p = p.randomized(s.seed, amp);
    }
    Ok(p)
}

/// Result of [`optimize_point`] plus diagnostics.
#[derive(Debug, Clone)]
pub struct OptimizeRun {
    pub baseline_qfi: f64,
    pub outcome: OptimizeOutcome,
    pub bound: f64,
    pub gradcheck_max_deviation: f64,
    pub residual_max: f64,
    pub record: PointRecord,
}

pub fn optimize_point(s: &Scenario, built: &Built, value: f64) -> CliResult<OptimizeRun> {
    let start = Instant::now();
    let (t_f, steps) = grid_point(s, built, value)?;
    let p = restricted_problem(s, built, t_f, steps)?;
    let baseline_qfi = p.objective()?;
    let outcome = variational_optimize(&p, &optimize_options(s))?;
    let fin = &outcome.problem;
    let (eval, adj) = problem_adjoint(fin)?;
    let residual = optimality_residual(fin, &adj)?;
    let samples = s.control.gradcheck_samples.unwrap_or(20);
    let gradcheck_max_deviation = if samples > 0 && steps > 0 {
        gradient_check(fin, s.control.gradcheck_perturbation.unwrap_or(1e-5), samples, s.seed)?.max_deviation
    } else {
        0.0
    };
    let bound = unrestricted_bound(&eval.result, fin.convention);
    let record = PointRecord {
        sweep_value: value,
        t_f,
        qfi: eval.qfi,
        qfi_ratio: checked_ratio(eval.qfi, bound, value)?,
        mu_plus: eval.spectrum.mu_plus,
        mu_minus: eval.spectrum.mu_minus,
        residual_max: Some(residual.max),
        steps,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        delta_pulses: Vec::new(),
    };
    Ok(OptimizeRun {
        baseline_qfi,
        outcome,
        bound,
        gradcheck_max_deviation,
        residual_max: residual.max,
        record,
    })
}

/// One sweep point at the scenario's control and initial-state policy.
pub fn run_point(s: &Scenario, built: &Built, value: f64) -> CliResult<PointRecord> {
    point(s, built, value).map_err(|e| match e {
        CliError::Core(e @ qfi_core::Error::Undersampled { .. }) => {
            CliError::Config(format!("at sweep value {value}: {e}"))
        }
        other => other,
    })
}

fn point(s: &Scenario, built: &Built, value: f64) -> CliResult<PointRecord> {
    let start = Instant::now();
    let (t_f, steps) = grid_point(s, built, value)?;
    let conv = convention(s)?;
    let state = initial_state(s.system.initial_state, built.n_sites);
    let finish = |spec: &GeneratorSpectrum, bound: f64, residual: Option<f64>, pulses: Vec<PulseRecord>| {
        let q = score(spec, state.as_ref())?;
        Ok(PointRecord {
            sweep_value: value,
            t_f,
            qfi: q,
            qfi_ratio: checked_ratio(q, bound, value)?,
            mu_plus: spec.mu_plus,
            mu_minus: spec.mu_minus,
            residual_max: residual,
            steps,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            delta_pulses: pulses,
        })
    };
    match s.control.kind {
        ControlKind::None | ControlKind::Floquet => {
            let basis = configured_basis(s, built.n_sites)?;
            if let Some(basis) = basis {
                let p = ControlProblem::new(built.schedule.clone(), basis, t_f, steps)?
                    .with_convention(conv)
                    .with_options(options(s, Storage::Full));
                let (eval, adj) = problem_adjoint(&p)?;
                let residual = optimality_residual(&p, &adj)?.max;
                let bound = unrestricted_bound(&eval.result, conv);
                return finish(&eval.spectrum, bound, Some(residual), Vec::new());
            }
            let r = propagate_with(&built.schedule, t_f, steps, &options(s, Storage::Endpoints))?;
            let spec = generator_with(&r, &built.schedule, conv)?;
            finish(&spec, unrestricted_bound(&r, conv), None, Vec::new())
        }
        ControlKind::PangJordan => {
            let pj = pang_jordan_control(&built.schedule, t_f, steps)?;
            let basis = match configured_basis(s, built.n_sites)? {
                Some(b) => b,
                None => basis_spanning(&pj.controls, built.n_sites)?,
            };
            let p = pj
                .to_problem(&built.schedule, basis)?
                .with_convention(conv)
                .with_options(options(s, Storage::Full));
            let (eval, adj) = problem_adjoint(&p)?;
            let residual = optimality_residual(&p, &adj)?.max;
            let bound = unrestricted_bound(&eval.result, conv);
            let pulses = pj
                .events
                .iter()
                .map(|e| PulseRecord {
                    time: e.time,
                    strength: e.strength,
                    generator: PauliOperator::from_dense(built.n_sites, &e.generator)
                        .ok()
                        .map(|op| op.to_string()),
                })
                .collect();
            finish(&eval.spectrum, bound, Some(residual), pulses)
        }
        ControlKind::Restricted => Ok(optimize_point(s, built, value)?.record),
    }
}

/// Unit Pauli strings appearing anywhere along a control trajectory.
fn basis_spanning(controls: &[PauliOperator], n: usize) -> CliResult<ControlBasis> {
    let mut labels: Vec<String> = Vec::new();
    for hc in controls {
        for t in hc.terms() {
            let l = t.label();
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
    }
    if labels.is_empty() {
        labels.push("Z0".into());
    }
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Ok(ControlBasis::from_labels(n, &refs)?)
}
