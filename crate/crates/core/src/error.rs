use alloc::string::String;

/// Errors raised by the solvers and their building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("column {0} has zero norm")]
    ZeroColumn(usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("linear system is singular and ridge fallback is disabled")]
    Singular,

    #[error("mixing matrix is rank deficient (smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumerating {0} submatrices exceeds the limit; the bound is infeasible at this size")]
    EnumerationTooLarge(u64),
}

pub type Result<T> = core::result::Result<T, Error>;
