use num_complex::Complex64;

use super::basis::ControlBasis;
use super::problem::ControlProblem;
use crate::dynamics::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, mul_adjoint, unitary_log_generator, CMatrix, CVector};
use crate::pauli::PauliOperator;

/// Relative eigenvalue gap below which `∂λH` counts as degenerate.
const GAP_TOL: f64 = 1e-10;

/// Impulsive relabeling at an eigenvalue crossing of `∂λH`: applying
/// `exp(−i·generator)` at `time` moves the followed eigenvectors back into
/// eigenvalue order.
#[derive(Debug, Clone)]
pub struct DeltaPulse {
    pub time: f64,
    pub generator: CMatrix,
    /// Largest eigenvalue magnitude of `generator`.
    pub strength: f64,
}

/// Unrestricted control `H_c(τ_k) = i Σ_α |φ̇_α⟩⟨φ_α| − H_λ(τ_k)` on the grid.
#[derive(Debug, Clone)]
pub struct PangJordanControl {
    pub times: Vec<f64>,
    pub controls: Vec<PauliOperator>,
    /// Set when `∂λH` is time-independent and the control reduces to
    /// cancelling the non-commuting part of `H_λ`.
    pub minimal: Option<PauliOperator>,
    pub events: Vec<DeltaPulse>,
}

/// Terms of `h` whose strings do not commute with `sensing`.
pub fn non_commuting_part(h: &PauliOperator, sensing: &PauliOperator) -> PauliOperator {
    h.filter(|s| {
        let single = s.to_operator();
        !single.commutes_with(sensing).unwrap_or(false)
    })
}

pub fn pang_jordan_control(schedule: &HamiltonianSchedule, t_f: f64, steps: usize) -> Result<PangJordanControl> {
    if schedule.drive.is_some() || schedule.controls.is_some() || !schedule.static_control.is_zero() {
        return Err(Error::InvalidConfiguration(
            "the unrestricted protocol takes a schedule carrying H_λ only".into(),
        ));
    }
    schedule.validate()?;
    if !t_f.is_finite() || t_f < 0.0 || (t_f > 0.0 && steps == 0) {
        return Err(Error::InvalidConfiguration(
            "need t_f >= 0 and at least one step".into(),
        ));
    }
    let times: Vec<f64> = (0..=steps)
        .map(|k| if steps == 0 { 0.0 } else { t_f * k as f64 / steps as f64 })
        .collect();

    if schedule.sensing_is_static() {
        let sensing = schedule.sensing_at(0.0);
        let controls: Vec<PauliOperator> = times
            .iter()
            .map(|&t| non_commuting_part(&schedule.hamiltonian_lambda(t), &sensing).scale_real(-1.0))
            .collect();
        let minimal = schedule.is_time_independent().then(|| controls[0].clone());
        return Ok(PangJordanControl {
            times,
            controls,
            minimal,
            events: Vec::new(),
        });
    }

    let n = schedule.n_sites;
    let mut vectors: Vec<CMatrix> = Vec::with_capacity(times.len());
    // next[k][a]: continuation at τ_{k+1} of eigenvector a at τ_k.
    let mut next: Vec<CMatrix> = Vec::with_capacity(steps);
    let mut events = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let d = schedule.sensing_at(t).to_dense_with_limit(8)?;
        let (vals, mut vecs) = hermitian_eigen(&d);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 || vals.windows(2).any(|w| w[1] - w[0] <= GAP_TOL * scale) {
            return Err(Error::DegenerateSpectrum { time: t });
        }
        let dim = vals.len();
        if k == 0 {
            for j in 0..dim {
                let mut col = vecs.column(j).into_owned();
                crate::linalg::fix_gauge(&mut col);
                vecs.set_column(j, &col);
            }
        } else {
            let prev: &CMatrix = &vectors[k - 1];
            let overlap = prev.adjoint() * &vecs;
            let perm = match_columns(&overlap);
            // Phase of each new column follows its predecessor.
            for (a, &b) in perm.iter().enumerate() {
                let o = overlap[(a, b)];
                let phase = if o.norm() > 0.0 {
                    o.conj() / o.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                let col = vecs.column(b) * phase;
                vecs.set_column(b, &col);
            }
            let mut cont = CMatrix::zeros(dim, dim);
            for (a, &b) in perm.iter().enumerate() {
                cont.set_column(a, &vecs.column(b));
            }
            if perm.iter().enumerate().any(|(a, &b)| a != b) {
                let w = mul_adjoint(&vecs, &cont);
                let generator = unitary_log_generator(&w);
                let (kv, _) = hermitian_eigen(&generator);
                let strength = kv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                events.push(DeltaPulse {
                    time: 0.5 * (times[k - 1] + t),
                    generator,
                    strength,
                });
            }
            next.push(cont);
        }
        vectors.push(vecs);
    }

    let delta = if steps == 0 { 0.0 } else { t_f / steps as f64 };
    let mut controls = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let h = schedule.hamiltonian_lambda(times[k]);
        let phi = &vectors[k];
        let dim = phi.nrows();
        let dphi = if steps == 0 {
            CMatrix::zeros(dim, dim)
        } else if k == 0 {
            let a = &next[0];
            (a - phi) * Complex64::new(1.0 / delta, 0.0)
        } else if k == steps {
            let b = previous_of(&vectors[k - 1], &next[k - 1], phi);
            (phi - b) * Complex64::new(1.0 / delta, 0.0)
        } else {
            let a = &next[k];
            let b = previous_of(&vectors[k - 1], &next[k - 1], phi);
            (a - b) * Complex64::new(0.5 / delta, 0.0)
        };
        let gen = hermitian_part(&(mul_adjoint(&dphi, phi) * Complex64::new(0.0, 1.0)));
        let hc = &PauliOperator::from_dense(n, &gen)? - &h;
        controls.push(hc);
    }
    Ok(PangJordanControl {
        times,
        controls,
        minimal: None,
        events,
    })
}

/// Column `a` of the result is the vector at the previous node that
/// continues into column `a` of `current`.
fn previous_of(prev: &CMatrix, cont: &CMatrix, current: &CMatrix) -> CMatrix {
    let dim = current.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        let target: CVector = current.column(a).into_owned();
        let src = (0..dim)
            .max_by(|&i, &j| {
                let oi = cont.column(i).dotc(&target).norm();
                let oj = cont.column(j).dotc(&target).norm();
                oi.total_cmp(&oj)
            })
            .unwrap_or(a);
        out.set_column(a, &prev.column(src));
    }
    out
}

/// Greedy overlap matching: row `a` goes to the unused column of largest
/// `|overlap|`, rows taken in order of their best overlap.
fn match_columns(overlap: &CMatrix) -> Vec<usize> {
    let dim = overlap.nrows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            pairs.push((overlap[(a, b)].norm(), a, b));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut perm = vec![usize::MAX; dim];
    let mut used = vec![false; dim];
    for (_, a, b) in pairs {
        if perm[a] == usize::MAX && !used[b] {
            perm[a] = b;
            used[b] = true;
        }
    }
    perm
}

impl PangJordanControl {
    /// Projects the trajectory on `basis`; fails when the basis misses part of
    /// the control by more than `tol`.
    pub fn coefficients(&self, basis: &ControlBasis, tol: f64) -> Result<Vec<Vec<f64>>> {
        let mut table = vec![Vec::with_capacity(self.times.len()); basis.len()];
        for (k, hc) in self.controls.iter().enumerate() {
            let (c, rest) = basis.project(hc)?;
            if rest > tol {
                return Err(Error::Constraint(format!(
                    "basis cannot represent the control at t = {} (leftover {rest:e})",
                    self.times[k]
                )));
            }
            for (row, v) in table.iter_mut().zip(c) {
                row.push(v);
            }
        }
        Ok(table)
    }

    /// Control problem realising this trajectory in `basis`.
    pub fn to_problem(&self, schedule: &HamiltonianSchedule, basis: ControlBasis) -> Result<ControlProblem> {
        let t_f = *self.times.last().unwrap_or(&0.0);
        let steps = self.times.len().saturating_sub(1);
        let table = self.coefficients(&basis, 1e-9)?;
        ControlProblem::new(schedule.clone(), basis, t_f, steps)?.with_coefficients(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generator, propagate, spread, unrestricted_bound, Envelope, QfiConvention};
    use crate::pauli::{build_spin_chain, BoundaryCondition, SpinChain};

    #[test]
    fn qubit_minimal_control() {
        let s = HamiltonianSchedule::qubit(1.0, 1.0);
        let pj = pang_jordan_control(&s, 2.0, 4).unwrap();
        let want = PauliOperator::term(1, "X0", -0.5).unwrap();
        assert!(pj.minimal.as_ref().unwrap().max_coefficient_diff(&want) < 1e-15);
        assert!(pj.controls.iter().all(|c| c.max_coefficient_diff(&want) < 1e-15));
        assert!(pj.events.is_empty());
    }

    #[test]
    fn commuting_field_needs_nothing() {
        let s = HamiltonianSchedule::qubit(1.0, 0.0);
        let pj = pang_jordan_control(&s, 1.0, 3).unwrap();
        assert!(pj.minimal.unwrap().is_zero());
    }

    #[test]
    fn chain_minimal_control() {
        let chain = SpinChain::new(4, 0.7, 1.3, BoundaryCondition::Periodic).unwrap();
        let s = HamiltonianSchedule::chain(&chain, 1.0);
        let pj = pang_jordan_control(&s, 1.0, 2).unwrap();
        let want = build_spin_chain(4, -0.7, -1.3, 0.0, BoundaryCondition::Periodic).unwrap();
        assert!(pj.minimal.unwrap().max_coefficient_diff(&want) < 1e-15);
    }

    #[test]
    fn rotating_sensing_is_followed() {
        // ∂λH = ½(cos θt σz + sin θt σx): the followed eigenbasis rotates.
        let theta = 0.8;
        let z = PauliOperator::term(1, "Z0", 0.5).unwrap();
        let x = PauliOperator::term(1, "X0", 0.5).unwrap();
        let s = HamiltonianSchedule::new(1, 1.0)
            .with_term(
                z,
                Envelope::Cos {
                    omega: theta,
                    phase: 0.0,
                },
                true,
            )
            .with_term(
                x,
                Envelope::Cos {
                    omega: theta,
                    phase: -std::f64::consts::FRAC_PI_2,
                },
                true,
            );
        let (t_f, steps) = (1.5, 400);
        let pj = pang_jordan_control(&s, t_f, steps).unwrap();
        assert!(pj.events.is_empty());
        // Generator of the rotation: i Σ|φ̇⟩⟨φ| = θ/2·σy, so H_c = θσy/2 − H_λ.
        let hc = &pj.controls[200];
        let y = hc.coefficient_of("Y0").unwrap().re;
        assert!((y - theta / 2.0).abs() < 1e-4, "{y}");
        let basis = ControlBasis::from_labels(1, &["X0", "Y0", "Z0"]).unwrap();
        let p = pj.to_problem(&s, basis).unwrap();
        let e = p.evaluate().unwrap();
        let bound = unrestricted_bound(&e.result, QfiConvention::Var);
        assert!((bound - t_f * t_f / 4.0).abs() < 1e-12);
        assert!((e.qfi / bound - 1.0).abs() < 1e-5, "{}", e.qfi / bound);
        assert!((spread(&s.sensing_at(0.3)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn crossing_emits_pulse() {
        let z = PauliOperator::term(1, "Z0", 0.5).unwrap();
        let s = HamiltonianSchedule::new(1, 1.0).with_term(z, Envelope::Cos { omega: 1.0, phase: 0.0 }, true);
        let pj = pang_jordan_control(&s, 3.0, 7).unwrap();
        assert_eq!(pj.events.len(), 1);
        let ev = &pj.events[0];
        assert!(ev.time > 1.0 && ev.time < 2.0);
        assert!((ev.strength - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn degenerate_time_dependent_sensing_is_an_error() {
        let z = PauliOperator::term(1, "Z0", 0.5).unwrap();
        let s = HamiltonianSchedule::new(1, 1.0).with_term(z, Envelope::Cos { omega: 1.0, phase: 0.0 }, true);
        let t = std::f64::consts::PI;
        let err = pang_jordan_control(&s, t, 2).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
    }

    #[test]
    fn unrestricted_qubit_reaches_bound() {
        let s = HamiltonianSchedule::qubit(1.0, 1.0);
        let pj = pang_jordan_control(&s, 4.0, 40).unwrap();
        let basis = ControlBasis::from_labels(1, &["X0", "Y0", "Z0"]).unwrap();
        let p = pj.to_problem(&s, basis).unwrap();
        let r = propagate(&p.controlled_schedule(), 4.0, 40).unwrap();
        let g = generator(&r, &p.controlled_schedule()).unwrap();
        assert!((g.max_qfi() - 4.0).abs() < 1e-12);
    }
}
