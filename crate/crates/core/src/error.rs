//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A column's residual norm collapsed during Gram-Schmidt. For noisy
    /// iterates this signals a degenerate draw; callers may resample.
    #[error("rank deficient input: column {col} residual fell below tolerance")]
    RankDeficient { col: usize },

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// The Theorem-3 precondition `delta <= exp(-epsilon/4)` failed.
    #[error(
        "invalid privacy budget: delta {delta} exceeds exp(-epsilon/4) = {limit} at epsilon {epsilon}"
    )]
    InvalidBudget {
        epsilon: f64,
        delta: f64,
        limit: f64,
    },

    #[error("noise scale must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("single-entry update magnitude {0} exceeds 1")]
    MagnitudeTooLarge(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset contains no interactions")]
    EmptyDataset,

    #[error("reference matrix has zero Frobenius norm")]
    ZeroReference,

    #[error("spectral gap is zero: lambda_k equals lambda_(q+1)")]
    ZeroGap,

    /// The federated protocol assumes no dropouts; a missing party aborts.
    #[error("dropout is unsupported: expected {expected} parties, got {got}")]
    DropoutUnsupported { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
