use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate system label `{0}`")]
    LabelCollision(String),
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),
    #[error("system labels differ: {0}")]
    LabelMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("not a density operator: {0}")]
    NotState(String),
    #[error("not a measurement operator: {0}")]
    NotMeasurement(String),
    #[error("not an isometry (deviation {0:.3e})")]
    NotIsometry(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("alphabet of size {size} exceeds the exact-search limit {limit}")]
    AlphabetTooLarge { size: usize, limit: usize },
    #[error("resource budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
