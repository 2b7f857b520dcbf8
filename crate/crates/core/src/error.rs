use thiserror::Error;

/// Errors raised by the choice model, the inference engines and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("presentation must contain at least one option")]
    EmptyPresentation,

    #[error("option {option} is out of range for K = {k}")]
    UnknownOption { option: usize, k: usize },

    #[error("option {option} is not part of the presentation {presentation}")]
    OptionNotPresented { option: usize, presentation: String },

    #[error("all presented options have zero preference mass")]
    DegeneratePresentation,

    #[error("invalid preference vector: {0}")]
    InvalidPreference(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("density undefined at the simplex boundary (option {option})")]
    BoundaryDensity { option: usize },

    #[error("sampler diverged: {clamped} of {sweeps} sweeps needed clamping")]
    SamplerDivergence { sweeps: u64, clamped: u64 },

    #[error("infeasible presentation constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("grid oracle supports K <= 4, got K = {k}")]
    OracleTooLarge { k: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("all grid weights underflowed")]
    NumericUnderflow,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("run {run} failed at interaction {t}: {source}")]
    EpisodeFailed {
        run: usize,
        t: usize,
        source: Box<Error>,
    },
}

impl Error {
    /// The innermost error, looking through episode context.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::EpisodeFailed { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
