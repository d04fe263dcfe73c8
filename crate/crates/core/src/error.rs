use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Exact enumeration or table size cap exceeded.
    #[error("size error: {0}")]
    Size(String),

    /// Interval or block not aligned with the required grid.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A stated precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Not enough samples to run a statistical check.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Grid too coarse for the requested accuracy.
    #[error("precision error: {0}")]
    Precision(String),
}

pub type Result<T> = std::result::Result<T, Error>;
