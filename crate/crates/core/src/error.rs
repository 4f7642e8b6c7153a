use thiserror::Error;

/// Errors raised by the matrix, geometry and estimator routines.
///
/// Column and pivot indices are 1-based, matching the usual mathematical
/// numbering of matrix entries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("unsupported shape n = {n}, p = {p}: need n > p >= 1")]
    UnsupportedShape { n: usize, p: usize },

    #[error("mock diagonal entry {0} is zero or negative")]
    NonPositivePivot(usize),

    #[error("matrix is not in the restricted class: pivot {0} vanishes")]
    NotRestricted(usize),

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("leading block is rank deficient at column {0}")]
    RankDeficient(usize),

    #[error("matrix is not positive semidefinite")]
    NonPsd,

    #[error("matrix is not positive definite")]
    NonPd,

    #[error("symmetric matrix is not a tangent vector here (residual {residual:e})")]
    NotInTangentSpace { residual: f64 },

    #[error("tangent vector is anchored at a different point")]
    AnchorMismatch,

    #[error("eigenvalue iteration failed to converge")]
    ConvergenceFailure,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
