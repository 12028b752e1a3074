use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("D = {0} is not a squarefree positive integer")]
    InvalidFieldParameter(i64),
    #[error("ideal generators are all zero")]
    ZeroIdeal,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rows are linearly dependent")]
    DependentRows,
    #[error("matrix is not in the block lower-triangular subgroup: {0}")]
    NotInSubgroup(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
