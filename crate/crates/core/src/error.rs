use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("model fitting failed: {0}")]
    Fitting(String),

    #[error("batch of {q} points exceeds the inclusion-exclusion limit of {limit}")]
    BatchTooLarge { q: usize, limit: usize },

    #[error("sobol dimension {requested} exceeds the generator limit of {limit}")]
    SobolDimension { requested: usize, limit: usize },

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
