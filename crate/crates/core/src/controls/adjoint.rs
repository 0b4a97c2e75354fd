use num_complex::Complex64;

use super::problem::{ControlProblem, Evaluation};
use crate::dynamics::{GeneratorSpectrum, PropagationResult, Storage};
use crate::error::{Error, Result};
use crate::linalg::{adjoint_mul, commutator, conjugate_by_adjoint, max_abs, CMatrix, SparseOperator};
use crate::par;

/// `Λ(τ_k) = −i·U(τ_k)·[Δρ, G_{τ_k}]·U†(τ_k)` on the propagation grid.
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    pub times: Vec<f64>,
    pub lambda: Vec<CMatrix>,
    pub delta_rho: CMatrix,
}

impl AdjointTrajectory {
    /// `max_k ‖Λ(τ_k)‖_max`
    pub fn max_norm(&self) -> f64 {
        self.lambda.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn terminal_norm(&self) -> f64 {
        self.lambda.last().map(max_abs).unwrap_or(0.0)
    }
}

/// Residual table `r_i(τ_k) = Tr{Λ(τ_k)·X_i}`.
#[derive(Debug, Clone)]
pub struct OptimalityResidual {
    pub table: Vec<Vec<f64>>,
    pub max: f64,
}

fn require_full(result: &PropagationResult) -> Result<()> {
    if result.storage != Storage::Full || result.partial_generators.len() != result.unitaries.len() {
        return Err(Error::GridMismatch(
            "adjoint quantities need a full-storage propagation with the generator".into(),
        ));
    }
    Ok(())
}

/// `Δρ = |φ₊⟩⟨φ₊| − |φ₋⟩⟨φ₋|`; zero when the generator vanishes outright.
pub fn delta_rho(spec: &GeneratorSpectrum) -> Result<CMatrix> {
    if spec.is_degenerate() {
        if max_abs(&spec.g) == 0.0 {
            return Ok(CMatrix::zeros(spec.dim(), spec.dim()));
        }
        return Err(Error::DegenerateGenerator { spread: spec.spread() });
    }
    Ok(spec.delta_rho())
}

pub fn adjoint_trajectory(result: &PropagationResult, spec: &GeneratorSpectrum) -> Result<AdjointTrajectory> {
    require_full(result)?;
    let drho = delta_rho(spec)?;
    let minus_i = Complex64::new(0.0, -1.0);
    let lambda = par::map_range(result.unitaries.len(), |k| {
        let c = commutator(&drho, &result.partial_generators[k]) * minus_i;
        conjugate_by_adjoint(&result.unitaries[k], &c)
    });
    Ok(AdjointTrajectory {
        times: result.time_grid.clone(),
        lambda,
        delta_rho: drho,
    })
}

pub fn optimality_residual(problem: &ControlProblem, adjoint: &AdjointTrajectory) -> Result<OptimalityResidual> {
    let dim = 1usize << problem.basis.n_sites();
    if adjoint.lambda.first().is_some_and(|l| l.nrows() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: adjoint.lambda[0].nrows(),
        });
    }
    let ops: Vec<SparseOperator> = problem
        .basis
        .elements()
        .iter()
        .map(SparseOperator::from_pauli)
        .collect();
    let mut max = 0.0f64;
    let table: Vec<Vec<f64>> = ops
        .iter()
        .map(|x| {
            adjoint
                .lambda
                .iter()
                .map(|l| {
                    let r = x.trace_mul(l).re;
                    max = max.max(r.abs());
                    r
                })
                .collect()
        })
        .collect();
    Ok(OptimalityResidual { table, max })
}

/// Exact derivative of the discrete objective with respect to the value
/// held on each step, `d_c × K`.
pub fn step_gradient(problem: &ControlProblem, eval: &Evaluation) -> Result<Vec<Vec<f64>>> {
    let r = &eval.result;
    require_full(r)?;
    if r.half_steps.len() != r.steps || r.half_generators.len() != r.steps {
        return Err(Error::GridMismatch("missing half-step data".into()));
    }
    let cs = problem.controlled_schedule().compile()?;
    let ops: Vec<SparseOperator> = problem
        .basis
        .elements()
        .iter()
        .map(SparseOperator::from_pauli)
        .collect();
    let w = &eval.weight;
    let g_tf = r.generator.as_ref().expect("full storage keeps the generator");
    let delta = r.step_size();
    let c = |x: f64| Complex64::new(x, 0.0);
    let static_d = cs.sensing_static().then(|| cs.step_sensing(0.0));
    let per_step: Vec<Vec<f64>> = par::map_range(r.steps, |k| {
        let tm = 0.5 * (r.time_grid[k] + r.time_grid[k + 1]);
        let d_owned;
        let d = match &static_d {
            Some(d) => d,
            None => {
                d_owned = cs.step_sensing(tm);
                &d_owned
            }
        };
        let (u0, uh, u1) = (&r.unitaries[k], &r.half_steps[k], &r.unitaries[k + 1]);
        let f1 = adjoint_mul(u1, &d.apply(u1));
        let fh = adjoint_mul(uh, &d.apply(uh));
        let m1 = g_tf - &r.partial_generators[k + 1] + f1 * c(delta / 6.0);
        let c1 = commutator(w, &m1);
        let ch = commutator(w, &(fh * c(2.0 * delta / 3.0)));
        let a0 = &c1 * c(delta / 6.0) + &ch * c(5.0 * delta / 24.0);
        let ah = &c1 * c(2.0 * delta / 3.0) + &ch * c(delta / 3.0);
        let a1 = &c1 * c(delta / 6.0) - &ch * c(delta / 24.0);
        let t = conjugate_by_adjoint(u0, &a0) + conjugate_by_adjoint(uh, &ah) + conjugate_by_adjoint(u1, &a1);
        ops.iter().map(|x| x.trace_mul(&t).im).collect()
    });
    let d_c = ops.len();
    Ok((0..d_c).map(|i| per_step.iter().map(|row| row[i]).collect()).collect())
}

/// `∂QFI/∂c_i(τ_k)` for every node; each node feeds the two steps around it
/// with weight ½.
pub fn gradient(problem: &ControlProblem, eval: &Evaluation) -> Result<Vec<Vec<f64>>> {
    let steps = step_gradient(problem, eval)?;
    let k = problem.steps;
    Ok(steps
        .iter()
        .map(|row| {
            (0..=k)
                .map(|j| {
                    let left = if j > 0 { row[j - 1] } else { 0.0 };
                    let right = if j < k { row[j] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect()
        })
        .collect())
}

/// Adjoint trajectory of a problem at its current coefficients.
pub fn problem_adjoint(problem: &ControlProblem) -> Result<(Evaluation, AdjointTrajectory)> {
    let eval = problem.evaluate()?;
    let adj = adjoint_trajectory(&eval.result, &eval.spectrum)?;
    Ok((eval, adj))
}
