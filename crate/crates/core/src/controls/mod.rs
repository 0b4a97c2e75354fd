//! Unrestricted and restricted controls: the adiabatic-following protocol,
//! the adjoint `Λ(τ)`, optimality residuals and gradient ascent.

mod adjoint;
mod basis;
mod gradcheck;
mod optimize;
mod pang_jordan;
mod problem;

pub use adjoint::{
    adjoint_trajectory, delta_rho, gradient, optimality_residual, problem_adjoint, step_gradient, AdjointTrajectory,
    OptimalityResidual,
};
pub use basis::ControlBasis;
pub use gradcheck::{gradient_check, relative_deviation, GradientCheck, GradientSample};
pub use optimize::{baseline, variational_optimize, OptimizeOptions, OptimizeOutcome};
pub use pang_jordan::{non_commuting_part, pang_jordan_control, DeltaPulse, PangJordanControl};
pub use problem::{ControlProblem, Evaluation, InitialStatePolicy};
