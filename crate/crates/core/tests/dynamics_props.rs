use proptest::prelude::*;
use qfi_core::dynamics::{
    default_dlambda, generator, generator_by_derivative, optimal_initial_state, propagate, propagate_with, qfi,
    Envelope, HamiltonianSchedule, PropagateOptions, TabulatedControls,
};
use qfi_core::floquet::{afm_frequency_chain, chain_drive, effective_hamiltonian, qubit_drive, HarmonicDrive};
use qfi_core::linalg::{expm_hermitian, max_abs_diff, unitarity_error, CVector};
use qfi_core::pauli::{BoundaryCondition, PauliOperator, SpinChain};
use qfi_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn harmonic_number(l: usize) -> f64 {
    (1..=l).map(|k| 1.0 / k as f64).sum()
}

/// Qubit drive at AFM for `omega` with equal amplitudes on five harmonics.
fn qubit_afm(omega: f64) -> (HamiltonianSchedule, HarmonicDrive) {
    let c = (omega / (8.0 * harmonic_number(5))).sqrt();
    let d = qubit_drive(&[c; 5], &[c; 5], omega).unwrap();
    (HamiltonianSchedule::qubit(1.0, 1.0).with_drive(d.clone()), d)
}

fn chain_afm(n: usize) -> (HamiltonianSchedule, HarmonicDrive) {
    let omega = afm_frequency_chain(&[10.0; 5], &[10.0; 5], 1.0).unwrap();
    let chain = SpinChain::new(n, 0.0, 1.0, BoundaryCondition::Periodic).unwrap();
    let d = chain_drive(&[10.0; 5], &[10.0; 5], omega, n, BoundaryCondition::Periodic).unwrap();
    (HamiltonianSchedule::chain(&chain, 1.0).with_drive(d.clone()), d)
}

fn controlled_qubit(t_f: f64, steps: usize, seed: u64) -> HamiltonianSchedule {
    let basis = vec![
        PauliOperator::term(1, "Y0", 1.0).unwrap(),
        PauliOperator::term(1, "Z0", 1.0).unwrap(),
    ];
    let mut ctl = TabulatedControls::zeros(basis, t_f, steps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in ctl.table.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    HamiltonianSchedule::qubit(1.0, 1.0).with_controls(ctl)
}

fn cosine_chain(n: usize) -> HamiltonianSchedule {
    let chain = SpinChain::new(n, 0.7, 1.0, BoundaryCondition::Open).unwrap();
    let kick = PauliOperator::term(n, "X0", 0.8).unwrap();
    HamiltonianSchedule::chain(&chain, 1.0).with_term(kick, Envelope::Cos { omega: 3.0, phase: 0.2 }, false)
}

fn optimal_qfi(s: &HamiltonianSchedule, t_f: f64, steps: usize) -> f64 {
    let r = propagate_with(s, t_f, steps, &PropagateOptions::endpoints()).unwrap();
    generator(&r, s).unwrap().max_qfi()
}

#[test]
fn unitarity_on_every_grid_point() {
    let s = cosine_chain(4);
    let r = propagate(&s, 3.0, 300).unwrap();
    for u in &r.unitaries {
        assert!(unitarity_error(u) < 1e-12);
    }
    let (s, d) = qubit_afm(500.0);
    let r = propagate(&s, 20.0 * d.period(), 20 * 200).unwrap();
    for u in r.unitaries.iter().chain(&r.half_steps) {
        assert!(unitarity_error(u) < 1e-12);
    }
}

/// At least second order: each halving of δ shrinks the change in QFI by
/// about 4 or more.
fn assert_second_order(name: &str, q: [f64; 3]) {
    let first = (q[1] - q[0]).abs();
    let second = (q[2] - q[1]).abs();
    if first < 1e-12 {
        assert!(second < 1e-12, "{name}: {q:?}");
        return;
    }
    let ratio = first / second;
    assert!(ratio >= 3.0, "{name}: change ratio {ratio} from {q:?}");
}

#[test]
fn self_convergence() {
    let t_f = 2.0;
    let qubit_static = HamiltonianSchedule::qubit(1.0, 1.0);
    let q = [40, 80, 160].map(|k| optimal_qfi(&qubit_static, t_f, k));
    assert_second_order("static qubit", q);

    let chain = cosine_chain(4);
    let q = [40, 80, 160].map(|k| optimal_qfi(&chain, t_f, k));
    assert_second_order("cosine chain", q);

    let (s, d) = qubit_afm(500.0);
    let t = 20.0 * d.period();
    let q = [20 * 200, 20 * 400, 20 * 800].map(|k| optimal_qfi(&s, t, k));
    assert_second_order("floquet qubit", q);

    let (s, d) = chain_afm(3);
    let t = 5.0 * d.period();
    let q = [5 * 200, 5 * 400, 5 * 800].map(|k| optimal_qfi(&s, t, k));
    assert_second_order("floquet chain", q);
}

#[test]
fn tabulated_controls_converge_with_table_refinement() {
    // Interpolated tables: refine both the table and the step together.
    let coarse = controlled_qubit(2.0, 40, 1);
    let refine = |s: &HamiltonianSchedule, factor: usize| {
        let ctl = s.controls.as_ref().unwrap();
        let k = ctl.steps();
        let mut fine = TabulatedControls::zeros(ctl.basis.clone(), ctl.t_f, k * factor);
        for (dst, src) in fine.table.iter_mut().zip(&ctl.table) {
            for (j, v) in dst.iter_mut().enumerate() {
                let x = j as f64 / factor as f64;
                let i = (x.floor() as usize).min(k - 1);
                let f = x - i as f64;
                *v = src[i] * (1.0 - f) + src[i + 1] * f;
            }
        }
        HamiltonianSchedule {
            controls: Some(fine),
            ..s.clone()
        }
    };
    let q1 = optimal_qfi(&coarse, 2.0, 40);
    let q2 = optimal_qfi(&refine(&coarse, 2), 2.0, 80);
    let q3 = optimal_qfi(&refine(&coarse, 4), 2.0, 160);
    assert!((q3 - q2).abs() < (q2 - q1).abs());
}

#[test]
fn dual_generator_agreement() {
    let check = |name: &str, s: &HamiltonianSchedule, t_f: f64, steps: usize| {
        let r = propagate_with(s, t_f, steps, &PropagateOptions::endpoints()).unwrap();
        let dl = default_dlambda(s.lambda);
        let g_der = generator_by_derivative(s, t_f, steps, dl).unwrap();
        let diff = max_abs_diff(r.generator.as_ref().unwrap(), &g_der);
        let tol = 1e-5f64.max(10.0 * dl * dl);
        assert!(diff <= tol, "{name}: {diff:e}");
    };
    check("qubit", &HamiltonianSchedule::qubit(1.0, 1.0), 5.0, 100);
    check("controlled qubit", &controlled_qubit(3.0, 60, 7), 3.0, 60);
    check("cosine chain", &cosine_chain(5), 3.0, 120);
    let (s, d) = qubit_afm(500.0);
    check("floquet qubit", &s, 50.0 * d.period(), 50 * 200);
    for n in [3, 6] {
        let (s, d) = chain_afm(n);
        check("floquet chain", &s, 10.0 * d.period(), 10 * 200);
    }
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 40,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn optimal_state_bounds_every_state(seed in 0u64..10_000, n in 1usize..=3, t_f in 0.1f64..4.0) {
        let chain = SpinChain::new(n.max(1), 0.4, 0.9, BoundaryCondition::Open).unwrap();
        let s = if n == 1 { HamiltonianSchedule::qubit(1.0, 0.9) } else { HamiltonianSchedule::chain(&chain, 1.0) };
        let r = propagate(&s, t_f, 40).unwrap();
        let spec = generator(&r, &s).unwrap();
        let (psi, best) = optimal_initial_state(&spec).unwrap();
        prop_assert!((qfi(&spec, &psi).unwrap() - best).abs() <= 1e-9 * best.max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let phi = random_state(spec.dim(), &mut rng);
            prop_assert!(qfi(&spec, &phi).unwrap() <= best + 1e-9);
        }
    }

    #[test]
    fn propagation_is_unitary(seed in 0u64..10_000, steps in 1usize..60) {
        let s = controlled_qubit(1.5, steps, seed);
        let r = propagate(&s, 1.5, steps).unwrap();
        prop_assert!(unitarity_error(r.final_unitary()) < 1e-12);
    }
}

#[test]
fn floquet_qubit_one_period_against_fine_reference() {
    let omega = 1826.67;
    let c = (omega / (8.0 * harmonic_number(5))).sqrt();
    let d = qubit_drive(&[c; 5], &[c; 5], omega).unwrap();
    let s = HamiltonianSchedule::qubit(1.0, 1.0).with_drive(d.clone());
    let t = d.period();
    let coarse = propagate_with(&s, t, 200, &PropagateOptions::endpoints()).unwrap();
    let fine = propagate_with(&s, t, 2000, &PropagateOptions::endpoints()).unwrap();
    let diff = max_abs_diff(coarse.final_unitary(), fine.final_unitary());
    assert!(diff <= 1e-6, "{diff:e}");
}

/// `‖U_exact(mT) − exp(−i H_F mT)‖` at a fixed number of periods.
fn stroboscopic_error(s: &HamiltonianSchedule, d: &HarmonicDrive, h_static: &PauliOperator, periods: usize) -> f64 {
    let t = periods as f64 * d.period();
    let exact = propagate_with(s, t, periods * 200, &PropagateOptions::endpoints()).unwrap();
    let hf = effective_hamiltonian(h_static, d).unwrap().h_f;
    let eff = expm_hermitian(&hf.to_dense().unwrap(), t);
    max_abs_diff(exact.final_unitary(), &eff)
}

/// Least-squares slope of `log y` against `log x`.
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn exact_versus_effective_decays_as_inverse_frequency() {
    let omegas = [250.0, 500.0, 1000.0];
    let errs: Vec<f64> = omegas
        .iter()
        .map(|&w| {
            let (s, d) = qubit_afm(w);
            let h_static = HamiltonianSchedule::qubit(1.0, 1.0).hamiltonian_lambda(0.0);
            stroboscopic_error(&s, &d, &h_static, 50)
        })
        .collect();
    let slope = log_slope(&omegas, &errs);
    assert!(slope <= -0.8, "qubit errors {errs:?}, slope {slope}");
    let c = errs.iter().zip(&omegas).fold(0.0f64, |m, (e, w)| m.max(e * w));
    for (e, w) in errs.iter().zip(&omegas) {
        assert!(*e <= c / w + 1e-15);
    }

    let errs: Vec<f64> = omegas
        .iter()
        .map(|&w| {
            let amp = (w / (8.0 * harmonic_number(5))).sqrt();
            let d = chain_drive(&[amp; 5], &[amp; 5], w, 3, BoundaryCondition::Periodic).unwrap();
            let chain = SpinChain::new(3, 0.0, 1.0, BoundaryCondition::Periodic).unwrap();
            let s = HamiltonianSchedule::chain(&chain, 1.0).with_drive(d.clone());
            stroboscopic_error(&s, &d, &chain.hamiltonian(1.0), 20)
        })
        .collect();
    let slope = log_slope(&omegas, &errs);
    assert!(slope <= -0.8, "chain errors {errs:?}, slope {slope}");
}

#[test]
fn lab_frame_matches_effective_frame_qfi() {
    // The rotating-frame generator integrates the static H_F; both frames
    // coincide at stroboscopic times since K(mT) = 0.
    let mut gaps = Vec::new();
    for w in [500.0, 1000.0] {
        let (s, d) = qubit_afm(w);
        let t = 100.0 * d.period();
        let lab = optimal_qfi(&s, t, 100 * 200);
        let model = effective_hamiltonian(&HamiltonianSchedule::qubit(1.0, 1.0).hamiltonian_lambda(1.0), &d).unwrap();
        let sensing = PauliOperator::term(1, "Z0", 0.5).unwrap();
        let rotating = HamiltonianSchedule::from_static(&model.h_f - &sensing, sensing, 1.0);
        let frame = optimal_qfi(&rotating, t, 400);
        let gap = (lab - frame).abs() / frame;
        gaps.push(gap);
    }
    assert!(gaps[0] < 5e-3);
    assert!(gaps[1] <= 0.6 * gaps[0], "{gaps:?}");
}
