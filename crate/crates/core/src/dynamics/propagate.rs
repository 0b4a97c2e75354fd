use num_complex::Complex64 as Complex;

use super::schedule::{spread, CompiledSchedule, HamiltonianSchedule};
use crate::error::{Error, Result};
use crate::linalg::{adjoint_mul, identity, matmul, CMatrix, SparseOperator};

/// Default minimum number of steps per period of the fastest drive harmonic.
pub const MIN_STEPS_PER_PERIOD: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    /// Every grid point, half-step and running partial generator.
    Full,
    /// Only `U(0)`, `U(t_f)` and `G_{t_f}`; allows the periodic shortcut.
    Endpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    pub storage: Storage,
    pub min_steps_per_period: usize,
    pub allow_undersampled: bool,
    /// Accumulate `G_τ = ∫ U†(∂λH)U` alongside the unitaries.
    pub generator: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions {
            storage: Storage::Full,
            min_steps_per_period: MIN_STEPS_PER_PERIOD,
            allow_undersampled: false,
            generator: true,
        }
    }
}

impl PropagateOptions {
    pub fn endpoints() -> Self {
        PropagateOptions {
            storage: Storage::Endpoints,
            ..Default::default()
        }
    }
}

/// Sampled unitary trajectory. With [`Storage::Full`], index `k` of
/// `unitaries` and `partial_generators` is grid point `τ_k`, and index `k` of
/// the half-step vectors is `τ_k + δ/2`.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub n_sites: usize,
    pub lambda: f64,
    pub t_f: f64,
    pub steps: usize,
    pub time_grid: Vec<f64>,
    pub storage: Storage,
    pub unitaries: Vec<CMatrix>,
    pub half_steps: Vec<CMatrix>,
    pub partial_generators: Vec<CMatrix>,
    pub half_generators: Vec<CMatrix>,
    /// `G_{t_f}` when the generator was accumulated.
    pub generator: Option<CMatrix>,
    pub steps_per_fastest_period: Option<f64>,
    /// `∫ spread(∂λH) dτ` on the same piecewise model; bounds the generator
    /// spread from above.
    pub sensing_spread_integral: f64,
    /// Whether the period-stacking shortcut was used.
    pub periodic_shortcut: bool,
}

impl PropagationResult {
    pub fn final_unitary(&self) -> &CMatrix {
        self.unitaries.last().expect("at least U(0)")
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn step_size(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.t_f / self.steps as f64
        }
    }
}

struct Segment {
    u: CMatrix,
    g: Option<CMatrix>,
    unitaries: Vec<CMatrix>,
    half_steps: Vec<CMatrix>,
    partial: Vec<CMatrix>,
    half_partial: Vec<CMatrix>,
}

/// `U†·D·U`
fn sandwich(d: &SparseOperator, u: &CMatrix) -> CMatrix {
    adjoint_mul(u, &d.apply(u))
}

fn simpson_full(g: &CMatrix, f0: &CMatrix, fh: &CMatrix, f1: &CMatrix, delta: f64) -> CMatrix {
    let w = Complex::new(delta / 6.0, 0.0);
    g + (f0 + fh * Complex::new(4.0, 0.0) + f1) * w
}

/// Running integral up to the half step: `δ(5f₀ + 8f½ − f₁)/24`.
fn simpson_half(g: &CMatrix, f0: &CMatrix, fh: &CMatrix, f1: &CMatrix, delta: f64) -> CMatrix {
    let w = Complex::new(delta / 24.0, 0.0);
    g + (f0 * Complex::new(5.0, 0.0) + fh * Complex::new(8.0, 0.0) - f1) * w
}

fn run_steps(
    cs: &CompiledSchedule,
    time_at: &dyn Fn(usize) -> f64,
    k0: usize,
    n: usize,
    gen: bool,
    full: bool,
) -> Segment {
    let dim = cs.dim;
    let mut u = identity(dim);
    let mut g = gen.then(|| CMatrix::zeros(dim, dim));
    let mut seg = Segment {
        u: identity(dim),
        g: None,
        unitaries: Vec::new(),
        half_steps: Vec::new(),
        partial: Vec::new(),
        half_partial: Vec::new(),
    };
    if full {
        seg.unitaries.reserve(n + 1);
        seg.unitaries.push(u.clone());
        if let Some(g) = &g {
            seg.partial.push(g.clone());
        }
    }
    let static_d = cs.sensing_static().then(|| cs.step_sensing(0.0));
    let static_h = cs.is_static().then(|| cs.step_hamiltonian(0.0, 0));
    let mut f_prev: Option<CMatrix> = None;
    for k in 0..n {
        let t0 = time_at(k0 + k);
        let t1 = time_at(k0 + k + 1);
        let delta = t1 - t0;
        let tm = 0.5 * (t0 + t1);
        let h_owned;
        let h = match &static_h {
            Some(h) => h,
            None => {
                h_owned = cs.step_hamiltonian(tm, k0 + k);
                &h_owned
            }
        };
        let u_half = h.exp_apply(0.5 * delta, &u);
        let u_next = h.exp_apply(0.5 * delta, &u_half);
        if let Some(gm) = g.as_mut() {
            let d_owned;
            let d = match &static_d {
                Some(d) => d,
                None => {
                    d_owned = cs.step_sensing(tm);
                    &d_owned
                }
            };
            let f0 = match f_prev.take() {
                Some(f) => f,
                None => sandwich(d, &u),
            };
            let fh = sandwich(d, &u_half);
            let f1 = sandwich(d, &u_next);
            if full {
                seg.half_partial.push(simpson_half(gm, &f0, &fh, &f1, delta));
            }
            *gm = simpson_full(gm, &f0, &fh, &f1, delta);
            if static_d.is_some() {
                f_prev = Some(f1);
            }
            if full {
                seg.partial.push(gm.clone());
            }
        }
        if full {
            seg.half_steps.push(u_half);
            seg.unitaries.push(u_next.clone());
        }
        u = u_next;
    }
    seg.u = u;
    seg.g = g;
    seg
}

/// `(W_a, G_a)` followed by `(W_b, G_b)`.
fn compose(a: &(CMatrix, Option<CMatrix>), b: &(CMatrix, Option<CMatrix>)) -> (CMatrix, Option<CMatrix>) {
    let w = matmul(&b.0, &a.0);
    let g = match (&a.1, &b.1) {
        (Some(ga), Some(gb)) => Some(ga + adjoint_mul(&a.0, &matmul(gb, &a.0))),
        _ => None,
    };
    (w, g)
}

fn power(base: &(CMatrix, Option<CMatrix>), mut m: usize) -> (CMatrix, Option<CMatrix>) {
    let dim = base.0.nrows();
    let mut acc = (identity(dim), base.1.as_ref().map(|_| CMatrix::zeros(dim, dim)));
    let mut sq = base.clone();
    while m > 0 {
        if m & 1 == 1 {
            acc = compose(&acc, &sq);
        }
        m >>= 1;
        if m > 0 {
            sq = compose(&sq, &sq);
        }
    }
    acc
}

pub fn propagate(schedule: &HamiltonianSchedule, t_f: f64, steps: usize) -> Result<PropagationResult> {
    propagate_with(schedule, t_f, steps, &PropagateOptions::default())
}

/// Midpoint piecewise-constant propagation
/// `U(τ_{k+1}) = exp(−i·H(τ_k + δ/2)·δ)·U(τ_k)` on `K = steps` uniform steps,
/// with the generator integrated by Simpson's rule inside each step.
pub fn propagate_with(
    schedule: &HamiltonianSchedule,
    t_f: f64,
    steps: usize,
    opts: &PropagateOptions,
) -> Result<PropagationResult> {
    if !t_f.is_finite() || t_f < 0.0 {
        return Err(Error::InvalidConfiguration(format!(
            "t_f must be finite and >= 0, got {t_f}"
        )));
    }
    if t_f > 0.0 && steps == 0 {
        return Err(Error::InvalidConfiguration("need at least one step for t_f > 0".into()));
    }
    let cs = schedule.compile()?;
    if let Some(c) = &schedule.controls {
        if c.steps() != steps || (c.t_f - t_f).abs() > 1e-12 * t_f.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "control table is for t_f = {} with {} steps, propagation asks t_f = {t_f} with {steps} steps",
                c.t_f,
                c.steps()
            )));
        }
    }
    let delta = if steps == 0 { 0.0 } else { t_f / steps as f64 };
    let steps_per_fastest_period = schedule.fastest_period().filter(|_| delta > 0.0).map(|p| p / delta);
    if let Some(spp) = steps_per_fastest_period {
        let need = opts.min_steps_per_period as f64;
        if spp < need * (1.0 - 1e-9) && !opts.allow_undersampled {
            return Err(Error::Undersampled {
                steps_per_period: spp,
                required: opts.min_steps_per_period,
            });
        }
    }

    let time_grid: Vec<f64> = (0..=steps)
        .map(|k| if steps == 0 { 0.0 } else { t_f * k as f64 / steps as f64 })
        .collect();
    let sensing_spread_integral = if schedule.sensing_is_static() {
        t_f * spread(&cs.sensing_const_pauli)?
    } else {
        let mut acc = 0.0;
        for k in 0..steps {
            let tm = 0.5 * (time_grid[k] + time_grid[k + 1]);
            acc += delta * spread(&schedule.sensing_at(tm))?;
        }
        acc
    };

    let full = opts.storage == Storage::Full;
    let gen = opts.generator;

    // Period stacking: one period is propagated, then composed m times.
    let period_steps = if !full && schedule.is_drive_periodic() && delta > 0.0 {
        let period = schedule.drive.as_ref().map(|d| d.period()).unwrap_or(0.0);
        let s = period / delta;
        let sr = s.round();
        ((s - sr).abs() <= 1e-9 * s && sr >= 1.0 && (steps as f64) >= 2.0 * sr).then_some(sr as usize)
    } else {
        None
    };

    let (unitaries, half_steps, partial, half_partial, generator, shortcut) = if let Some(s) = period_steps {
        let m = steps / s;
        let rem = steps - m * s;
        let local = |k: usize| k as f64 * delta;
        let one = run_steps(&cs, &local, 0, s, gen, false);
        let mut total = power(&(one.u, one.g), m);
        if rem > 0 {
            let tail = run_steps(&cs, &local, 0, rem, gen, false);
            total = compose(&total, &(tail.u, tail.g));
        }
        (
            vec![identity(cs.dim), total.0],
            Vec::new(),
            Vec::new(),
            Vec::new(),
            total.1,
            true,
        )
    } else {
        let grid = |k: usize| time_grid[k];
        let seg = run_steps(&cs, &grid, 0, steps, gen, full);
        let unitaries = if full {
            seg.unitaries
        } else {
            vec![identity(cs.dim), seg.u]
        };
        (unitaries, seg.half_steps, seg.partial, seg.half_partial, seg.g, false)
    };

    Ok(PropagationResult {
        n_sites: schedule.n_sites,
        lambda: schedule.lambda,
        t_f,
        steps,
        time_grid,
        storage: opts.storage,
        unitaries,
        half_steps,
        partial_generators: partial,
        half_generators: half_partial,
        generator,
        steps_per_fastest_period,
        sensing_spread_integral,
        periodic_shortcut: shortcut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::qubit_drive;
    use crate::linalg::{max_abs_diff, unitarity_error, CMatrix};
    use crate::pauli::PauliOperator;
    use num_complex::Complex64;

    #[test]
    fn constant_z_half_turn() {
        let s =
            HamiltonianSchedule::from_static(PauliOperator::zero(1), PauliOperator::term(1, "Z0", 0.5).unwrap(), 1.0);
        let r = propagate(&s, std::f64::consts::PI, 10).unwrap();
        let u = r.final_unitary();
        let want = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2),
            Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2),
        ]));
        assert!(max_abs_diff(u, &want) < 1e-13);
        assert_eq!(r.unitaries.len(), 11);
        assert!(max_abs_diff(&r.unitaries[0], &identity(2)) == 0.0);
    }

    #[test]
    fn zero_hamiltonian_identity() {
        let s = HamiltonianSchedule::new(2, 0.0);
        let r = propagate(&s, 3.0, 7).unwrap();
        for u in &r.unitaries {
            assert_eq!(u, &identity(4));
        }
    }

    #[test]
    fn undersampling_refused_unless_allowed() {
        let d = qubit_drive(&[1.0; 5], &[1.0; 5], 100.0).unwrap();
        let s = HamiltonianSchedule::qubit(1.0, 1.0).with_drive(d);
        let t = 2.0 * std::f64::consts::PI / 100.0;
        let err = propagate(&s, t, 100).unwrap_err();
        assert!(matches!(err, Error::Undersampled { required: 40, .. }));
        let opts = PropagateOptions {
            allow_undersampled: true,
            ..Default::default()
        };
        assert!(propagate_with(&s, t, 100, &opts).is_ok());
        assert!(propagate(&s, t, 200).is_ok());
    }

    #[test]
    fn periodic_shortcut_matches_direct() {
        let d = qubit_drive(&[3.0, 1.0], &[2.0, -1.0], 40.0).unwrap();
        let s = HamiltonianSchedule::qubit(0.8, 1.1).with_drive(d.clone());
        let per = 80;
        let m = 13;
        let t_f = m as f64 * d.period() + 5.0 * d.period() / per as f64;
        let steps = m * per + 5;
        let fast = propagate_with(&s, t_f, steps, &PropagateOptions::endpoints()).unwrap();
        assert!(fast.periodic_shortcut);
        let slow = propagate(&s, t_f, steps).unwrap();
        assert!(max_abs_diff(fast.final_unitary(), slow.final_unitary()) < 1e-11);
        let (gf, gs) = (fast.generator.clone().unwrap(), slow.generator.unwrap());
        assert!(max_abs_diff(&gf, &gs) < 1e-10);
        assert!(unitarity_error(fast.final_unitary()) < 1e-12);
    }
}
