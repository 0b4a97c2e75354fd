use num_complex::Complex64;

use super::adjoint::gradient;
use super::problem::{ControlProblem, Evaluation, InitialStatePolicy};
use crate::dynamics::Storage;
use crate::error::{Error, Result};
use crate::linalg::CVector;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    pub iterations: usize,
    /// First trial step along the functional gradient.
    pub initial_step: f64,
    pub max_halvings: usize,
    /// Step multiplier after an accepted step.
    pub growth: f64,
    /// Allowed QFI decrease before a failed line search is an error.
    pub line_search_tolerance: f64,
    /// Stop once an accepted update moves no coefficient by more than this.
    pub convergence_tolerance: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            iterations: 100,
            initial_step: 0.1,
            max_halvings: 30,
            growth: 2.0,
            line_search_tolerance: 1e-9,
            convergence_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub problem: ControlProblem,
    /// QFI before the first step and after every accepted one.
    pub history: Vec<f64>,
    pub final_qfi: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations in which `Δρ` was held over from the previous one.
    pub frozen_iterations: Vec<usize>,
}

fn extremal_swap(prev: &(CVector, CVector), now: &(CVector, CVector)) -> bool {
    let keep = prev.0.dotc(&now.0).norm_sqr();
    let swap = prev.0.dotc(&now.1).norm_sqr();
    swap > keep
}

fn dump(iteration: usize, qfi: f64, grad: &[Vec<f64>]) -> String {
    let bad: Vec<String> = grad
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(k, v)| (i, k, *v)))
        .filter(|(_, _, v)| !v.is_finite())
        .take(8)
        .map(|(i, k, v)| format!("c{i}[{k}]={v}"))
        .collect();
    format!(
        "iteration {iteration}, qfi {qfi}, non-finite entries: {}",
        bad.join(" ")
    )
}

/// Projected gradient ascent of the QFI over the coefficient table, with
/// backtracking and `Δρ` refreshed from the generator every iteration.
pub fn variational_optimize(problem: &ControlProblem, opts: &OptimizeOptions) -> Result<OptimizeOutcome> {
    if problem.dim_controls() == 0 {
        return Err(Error::InvalidConfiguration("nothing to optimize: empty basis".into()));
    }
    if problem.coefficients.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfiguration("non-finite initial coefficients".into()));
    }
    let mut current = problem.clone();
    let mut eval = current.evaluate()?;
    let mut history = vec![eval.qfi];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    let mut frozen_iterations = Vec::new();
    let mut prev_pair: Option<(CVector, CVector)> = None;
    let mut frozen_last = false;

    for it in 0..opts.iterations {
        iterations = it + 1;
        let pair = (eval.spectrum.phi_plus.clone(), eval.spectrum.phi_minus.clone());
        if matches!(current.policy, InitialStatePolicy::GeneratorOptimal) && !eval.spectrum.is_degenerate() {
            if let Some(prev) = prev_pair.as_ref().filter(|p| !frozen_last && extremal_swap(p, &pair)) {
                let drho = &prev.0 * prev.0.adjoint() - &prev.1 * prev.1.adjoint();
                let s = 0.5 * current.convention.factor() * eval.spectrum.spread();
                eval.weight = drho * Complex64::new(s, 0.0);
                frozen_iterations.push(it);
                frozen_last = true;
            } else {
                frozen_last = false;
                prev_pair = Some(pair);
            }
        }
        let grad = gradient(&current, &eval)?;
        if grad.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                iteration: it,
                dump: dump(it, eval.qfi, &grad),
            });
        }
        let direction: Vec<Vec<f64>> = grad
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(k, g)| {
                        let w = current.node_weight(k);
                        if w > 0.0 {
                            g / w
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let dmax = direction.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if dmax == 0.0 {
            converged = true;
            break;
        }

        let mut eta = step;
        let mut accepted = None;
        let mut best = f64::NEG_INFINITY;
        for _ in 0..=opts.max_halvings {
            let trial_table: Vec<Vec<f64>> = current
                .coefficients
                .iter()
                .zip(&direction)
                .map(|(c, d)| c.iter().zip(d).map(|(a, b)| a + eta * b).collect())
                .collect();
            let mut trial = current.clone();
            trial.set_coefficients(trial_table)?;
            let value = trial.evaluate_with(Storage::Endpoints)?.qfi;
            best = best.max(value);
            if value > eval.qfi {
                accepted = Some((trial, value));
                break;
            }
            eta *= 0.5;
        }
        match accepted {
            Some((trial, value)) => {
                current = trial;
                eval = current.evaluate()?;
                debug_assert!((eval.qfi - value).abs() <= 1e-9 * value.abs().max(1.0));
                history.push(eval.qfi);
                step = eta * opts.growth;
                if eta * dmax < opts.convergence_tolerance {
                    converged = true;
                    break;
                }
            }
            None => {
                let decrease = eval.qfi - best;
                if decrease > opts.line_search_tolerance {
                    return Err(Error::StepSizeFailure {
                        iteration: it,
                        decrease,
                    });
                }
                converged = true;
                break;
            }
        }
    }
    let final_qfi = eval.qfi;
    Ok(OptimizeOutcome {
        problem: current,
        history,
        final_qfi,
        iterations,
        converged,
        frozen_iterations,
    })
}

/// Evaluation of the starting point only.
pub fn baseline(problem: &ControlProblem) -> Result<Evaluation> {
    problem.evaluate()
}
