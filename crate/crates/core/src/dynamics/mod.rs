//! Time-ordered propagation, the metrological generator and QFI evaluation.

mod generator;
mod propagate;
mod schedule;

pub use generator::{
    default_dlambda, generator, generator_by_derivative, generator_by_derivative_with, generator_with,
    normalized_ratio, optimal_initial_state, qfi, unrestricted_bound, GeneratorSpectrum, QfiConvention, DEGENERACY_TOL,
};
pub use propagate::{propagate, propagate_with, PropagateOptions, PropagationResult, Storage, MIN_STEPS_PER_PERIOD};
pub use schedule::{spread, Envelope, HamiltonianSchedule, ScheduleTerm, TabulatedControls};
