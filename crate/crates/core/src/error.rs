use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} sites, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{n_sites} sites exceeds the dense limit of {limit} (allowed range 1..={limit})")]
    Capacity { n_sites: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("unsupported three-body pattern: {0}")]
    UnsupportedPattern(String),

    #[error("coefficient constraint violated: {0}")]
    Constraint(String),

    #[error("invalid drive frequency {0} (must be positive and finite)")]
    InvalidFrequency(f64),

    #[error("no amplitude-frequency match: {0}")]
    NoMatching(String),

    #[error(
        "undersampled drive: {steps_per_period:.2} steps per fastest period, at least {required} required \
         (set allow_undersampled to override)"
    )]
    Undersampled { steps_per_period: f64, required: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate generator: extremal eigenvalue spread {spread:e} is below tolerance")]
    DegenerateGenerator { spread: f64 },

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("degenerate spectrum of the sensing operator at t = {time}")]
    DegenerateSpectrum { time: f64 },

    #[error("non-finite gradient at iteration {iteration}: {dump}")]
    NonFiniteGradient { iteration: usize, dump: String },

    #[error("line search failed at iteration {iteration}: QFI decreased by {decrease:e}")]
    StepSizeFailure { iteration: usize, decrease: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical failures, as opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGenerator { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::NonFiniteGradient { .. }
                | Error::StepSizeFailure { .. }
        )
    }
}
