use thiserror::Error;

/// Errors raised by the numerics, filters, bank, and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} is not positive)")]
    NotPositiveDefinite { pivot: usize },

    #[error("compound matrix is rank deficient (diagonal {index} below tolerance)")]
    RankDeficient { index: usize },

    #[error("matrix is not lower triangular with a positive diagonal")]
    NotLowerTriangular,

    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in propagated state")]
    NonFiniteState,

    #[error("singular innovation covariance (zero diagonal at {index})")]
    SingularInnovation { index: usize },

    #[error("innovation variance is not positive")]
    NonPositiveInnovation,

    #[error("all hypothesis likelihoods underflowed to zero")]
    DegenerateLikelihoods,

    #[error("invalid simulation step: {0}")]
    InvalidStep(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
