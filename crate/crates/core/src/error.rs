use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a nonzero vector")]
    ZeroVector,

    #[error("operation requires dimension >= {0}")]
    DimensionTooSmall(usize),

    #[error("operation requires an intermediate eigenvalue (n >= 3)")]
    NoIntermediateEigenvalue,

    #[error("simplex vertex is outside the domain of the map")]
    VertexInput,

    #[error("not a probability vector: {0}")]
    NotOnSimplex(String),

    #[error("polynomial is unbounded below on t >= 0")]
    UnboundedBelow,

    #[error("no observed entries")]
    EmptyObservations,

    #[error("iteration did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
