use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adjoint::gradient;
use super::problem::ControlProblem;
use crate::error::{Error, Result};
use crate::par;

/// One compared entry of the gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSample {
    pub control: usize,
    pub node: usize,
    pub adjoint: f64,
    pub finite_difference: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub max_deviation: f64,
    pub samples: Vec<GradientSample>,
}

/// `|a − f| / max(|a|, |f|, floor)`.
pub fn relative_deviation(a: f64, f: f64, floor: f64) -> f64 {
    let scale = a.abs().max(f.abs()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - f).abs() / scale
    }
}

/// Compares the adjoint gradient with central differences of the QFI on
/// `samples` seeded random entries (all entries when fewer exist).
pub fn gradient_check(problem: &ControlProblem, perturbation: f64, samples: usize, seed: u64) -> Result<GradientCheck> {
    if !(1e-7..=1e-3).contains(&perturbation) {
        return Err(Error::InvalidConfiguration(format!(
            "perturbation must lie in [1e-7, 1e-3], got {perturbation}"
        )));
    }
    let eval = problem.evaluate()?;
    let grad = gradient(problem, &eval)?;
    let nodes = problem.steps + 1;
    let total = problem.dim_controls() * nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = sample(&mut rng, total, samples.min(total)).into_vec();
    picks.sort_unstable();
    // Entries below this are dominated by difference round-off.
    let floor = 1e-9 * eval.qfi.abs().max(1.0);
    let results: Vec<Result<GradientSample>> = par::map(&picks, |&idx| {
        let (i, k) = (idx / nodes, idx % nodes);
        let shifted = |h: f64| -> Result<f64> {
            let mut p = problem.clone();
            p.coefficients[i][k] += h;
            p.objective()
        };
        let fd = (shifted(perturbation)? - shifted(-perturbation)?) / (2.0 * perturbation);
        let a = grad[i][k];
        Ok(GradientSample {
            control: i,
            node: k,
            adjoint: a,
            finite_difference: fd,
            deviation: relative_deviation(a, fd, floor),
        })
    });
    let samples: Vec<GradientSample> = results.into_iter().collect::<Result<_>>()?;
    let max_deviation = samples.iter().fold(0.0f64, |m, s| m.max(s.deviation));
    Ok(GradientCheck { max_deviation, samples })
}
