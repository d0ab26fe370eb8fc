use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("duplicate training input at index {index} with zero observation noise")]
    DuplicateInput { index: usize },

    #[error("particle weights must be finite, nonnegative and not all zero")]
    DegenerateWeights,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("linear system is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("pairwise win matrix invariant violated: {0}")]
    InvalidWinMatrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;
