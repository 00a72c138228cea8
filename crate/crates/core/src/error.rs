use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants are grouped by the module that raises them so the CLI can map
/// them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid unitary: max |U†U - I| = {deviation:.3e}")]
    InvalidUnitary { deviation: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid subsystem index {index} (state has {count} subsystems)")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("tensor factors must all be kets or all be operators")]
    MixedTensorKinds,

    #[error("relative entropy is infinite: support of the first state is not contained in the support of the second (leak {leak:.3e})")]
    SupportViolation { leak: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer did not converge after {iterations} iterations (last gap {last_gap:.3e})")]
    NonConvergence { iterations: usize, last_gap: f64 },

    #[error("bootstrap resample {index} failed: {source}")]
    Resample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("data validation failed at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("protocol convention check failed: {0}")]
    Convention(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
