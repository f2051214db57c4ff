use thiserror::Error;

/// Errors raised across the verification stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("state is not normalized (norm deviation {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("trace is not one (|tr - 1| = {deviation:.3e})")]
    NotUnitTrace { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("operators are not complete/trace-preserving (max deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("state is classified as {found}, not as the requested label {expected}")]
    Misclassified { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state {index}: {source}")]
    AtState {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error in {path} at {location}: {message}")]
    Schema {
        path: String,
        location: String,
        message: String,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_state(self, index: usize) -> Self {
        Error::AtState {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
