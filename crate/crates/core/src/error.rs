use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty vector or matrix")]
    Empty,
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("zero column {0}")]
    ZeroColumn(usize),
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("every index is excluded")]
    AllExcluded,
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("vector is not unit-norm (norm {0})")]
    NotUnitNorm(f64),
    #[error("reflector has a nonzero entry outside its support at index {0}")]
    OutsideSupport(usize),
    #[error("references are linearly dependent (singular value ratio {0:e})")]
    DependentReferences(f64),
    #[error("rank deficient least-squares system at atom {0}")]
    RankDeficient(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("postcondition violated: {0}")]
    Postcondition(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
