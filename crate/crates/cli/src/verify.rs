//! Oracle-equivalence checks behind `qfictl verify`.

use qfi_core::controls::pang_jordan_control;
use qfi_core::dynamics::{default_dlambda, generator_by_derivative_with, propagate_with, Storage};
use qfi_core::floquet::{kick_operator, kick_operator_pauli};
use qfi_core::linalg::{commutator, max_abs_diff};
use qfi_core::pauli::{Letter, PauliString};
use qfi_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ControlKind, Scenario, SystemKind};
use crate::error::{CliError, CliResult};
use crate::scenario::{build, configured_basis, grid_point, options, restricted_problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Flips the sign of the first-order commutator term in `H_F`.
    SignFlip,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

fn random_string(n: usize, rng: &mut ChaCha8Rng) -> PauliString {
    let letters: Vec<(usize, Letter)> = (0..n)
        .filter_map(|site| match rng.gen_range(0..4) {
            0 => None,
            k => Some((site, Letter::ALL[k - 1])),
        })
        .collect();
    PauliString::new(n, &letters, Complex64::new(1.0, 0.0)).expect("sites in range")
}

/// Parity rule and dense agreement on `pairs` random string pairs with
/// n ≤ 6. Returns (parity violations, worst dense deviation).
pub fn commutator_fuzz(pairs: usize, seed: u64) -> CliResult<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let n = rng.gen_range(1..=6);
        let a = random_string(n, &mut rng);
        let b = random_string(n, &mut rng);
        let c = a.to_operator().commutator(&b.to_operator())?;
        let even = a.key().differing_overlap(b.key()).is_multiple_of(2);
        if c.is_zero() != even {
            violations += 1;
        }
        let dense = commutator(&a.to_operator().to_dense()?, &b.to_operator().to_dense()?);
        worst = worst.max(max_abs_diff(&c.to_dense()?, &dense));
    }
    Ok((violations, worst))
}

/// `to_dense(a·b) = to_dense(a)·to_dense(b)` on n ≤ 4.
pub fn homomorphism_fuzz(pairs: usize, seed: u64) -> CliResult<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let n = rng.gen_range(1..=4);
        let a = random_string(n, &mut rng).to_operator();
        let b = random_string(n, &mut rng).to_operator();
        let prod = a.multiply(&b)?.to_dense()?;
        worst = worst.max(max_abs_diff(&prod, &(a.to_dense()? * b.to_dense()?)));
    }
    Ok(worst)
}

/// Largest coefficient by which `H_F` differs from `λ·∂λH` on AFM-matched
/// scenarios with no coupling.
pub fn afm_residue(mutation: Mutation) -> CliResult<f64> {
    let sign = match mutation {
        Mutation::None => 1.0,
        Mutation::SignFlip => -1.0,
    };
    let mut worst = 0.0f64;
    for (kind, n) in [
        (SystemKind::Qubit, 1usize),
        (SystemKind::Chain, 4),
        (SystemKind::Chain, 5),
    ] {
        let text = match kind {
            SystemKind::Qubit => "name='afm'\n[system]\nkind='qubit'\n[control]\nkind='floquet'\n\
                                  first=[10.0,10.0,10.0,10.0,10.0]\nsecond=[10.0,10.0,10.0,10.0,10.0]\n\
                                  [grid]\nperiods=[1.0]\n"
                .to_string(),
            SystemKind::Chain => format!(
                "name='afm'\n[system]\nkind='chain'\nn={n}\n[control]\nkind='floquet'\n\
                 first=[10.0,10.0,10.0,10.0,10.0]\nsecond=[10.0,10.0,10.0,10.0,10.0]\n[grid]\nperiods=[1.0]\n"
            ),
        };
        let s = Scenario::from_toml(&text)?;
        let b = build(&s, None)?;
        let drive = b.drive.as_ref().expect("floquet scenario");
        let h_static = &b.schedule.hamiltonian_lambda(0.0) + &b.schedule.static_control;
        let hf = &h_static + &drive.first_order_term()?.scale_real(sign);
        let target = b.schedule.sensing_at(0.0).scale_real(b.schedule.lambda);
        worst = worst.max(hf.max_coefficient_diff(&target));
    }
    Ok(worst)
}

/// `max(‖K(0)‖, max_t ‖K(t+T) − K(t)‖)` over the AFM drives.
pub fn kick_normalization(seed: u64) -> CliResult<f64> {
    let text = "name='k'\n[system]\nkind='chain'\nn=3\n[control]\nkind='floquet'\n\
                first=[10.0,10.0]\nsecond=[10.0,5.0]\n[grid]\nperiods=[1.0]\n";
    let s = Scenario::from_toml(text)?;
    let b = build(&s, None)?;
    let d = b.drive.as_ref().expect("floquet scenario");
    let mut worst = kick_operator_pauli(d, 0.0).coefficient_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let t = rng.gen_range(0.0..1.0);
        worst = worst.max(max_abs_diff(&kick_operator(d, t)?, &kick_operator(d, t + d.period())?));
    }
    Ok(worst)
}

/// Integral and derivative forms of the generator on the first nonzero probe
/// time of `s`, controls included; max-norm difference and the tolerance
/// `max(1e-5, 10 dλ²)`. `n` overrides the chain length.
pub fn dual_generator(s: &Scenario, n: Option<usize>) -> CliResult<(f64, f64)> {
    let b = build(s, n)?;
    let t = s.times()?.into_iter().find(|v| *v > 0.0).unwrap_or(0.0);
    let (t_f, steps) = grid_point(s, &b, t)?;
    let schedule = match s.control.kind {
        ControlKind::Restricted => restricted_problem(s, &b, t_f, steps)?.controlled_schedule(),
        ControlKind::PangJordan => {
            let pj = pang_jordan_control(&b.schedule, t_f, steps)?;
            let basis = configured_basis(s, b.n_sites)?
                .ok_or_else(|| CliError::Config("pang_jordan verification needs control.basis".into()))?;
            pj.to_problem(&b.schedule, basis)?.controlled_schedule()
        }
        ControlKind::None | ControlKind::Floquet => b.schedule.clone(),
    };
    let opts = options(s, Storage::Endpoints);
    let r = propagate_with(&schedule, t_f, steps, &opts)?;
    let dl = default_dlambda(schedule.lambda);
    let g_der = generator_by_derivative_with(&schedule, t_f, steps, dl, &opts)?;
    let g = r.generator.as_ref().expect("generator accumulated");
    Ok((max_abs_diff(g, &g_der), 1e-5f64.max(10.0 * dl * dl)))
}

/// `(label, chain length)` pairs a scenario contributes to the
/// dual-generator check: every `grid.n` entry up to `max_n` for sweep-n
/// scenarios, else the scenario itself when small enough.
pub fn dual_generator_cases(s: &Scenario, max_n: usize) -> Vec<(String, Option<usize>)> {
    match &s.grid.n {
        Some(ns) => ns
            .iter()
            .filter(|&&n| n <= max_n)
            .map(|&n| (format!("{} n={n}", s.name), Some(n)))
            .collect(),
        None if s.system.n <= max_n => vec![(s.name.clone(), None)],
        None => Vec::new(),
    }
}

/// Scenarios checked by default: small enough to run in seconds.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let texts = [
        "name='static qubit'\n[system]\nkind='qubit'\n[grid]\nt_f=[5.0]\n",
        "name='floquet qubit'\n[system]\nkind='qubit'\n[control]\nkind='floquet'\nomega=500.0\n\
         [grid]\nperiods=[50.0]\n",
        "name='floquet chain n=4'\n[system]\nkind='chain'\nn=4\n[control]\nkind='floquet'\n\
         first=[10.0,10.0,10.0,10.0,10.0]\nsecond=[10.0,10.0,10.0,10.0,10.0]\n[grid]\nperiods=[10.0]\n",
        "name='coupled chain n=3'\n[system]\nkind='chain'\nn=3\nj=0.5\n[grid]\nt_f=[2.0]\n",
    ];
    texts
        .iter()
        .map(|t| Scenario::from_toml(t).expect("built-in scenario parses"))
        .collect()
}

/// Runs every check; `extra` scenarios join the dual-generator check and
/// fail with a capacity error past the dense limit.
pub fn run(mutation: Mutation, extra: &[Scenario]) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    let (violations, dense) = commutator_fuzz(1000, 1)?;
    checks.push(Check::new(
        "parity rule violations (1000 pairs, n<=6)",
        violations as f64,
        0.0,
    ));
    checks.push(Check::new("symbolic vs dense commutator", dense, 1e-12));
    checks.push(Check::new(
        "dense product homomorphism (n<=4)",
        homomorphism_fuzz(300, 2)?,
        1e-12,
    ));
    for s in builtin_scenarios().iter().chain(extra) {
        for (label, n) in dual_generator_cases(s, usize::MAX) {
            let (diff, tol) = dual_generator(s, n)?;
            checks.push(Check::new(format!("dual generator: {label}"), diff, tol));
        }
    }
    checks.push(Check::new("AFM cancellation in H_F", afm_residue(mutation)?, 1e-10));
    checks.push(Check::new(
        "kick operator K(0) = 0 and periodic",
        kick_normalization(3)?,
        1e-12,
    ));
    Ok(checks)
}

pub fn table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "{:<4}  {:<width$}  {:>12.3e}  <= {:.0e}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
        ));
    }
    out
}
