use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("base point mismatch between jet operands")]
    BasePointMismatch,
    #[error("insufficient order: {what} needs order {needed}, have {available}")]
    InsufficientOrder {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("jet order {0} exceeds the supported maximum {max}", max = crate::jet::MAX_ORDER)]
    OrderTooHigh(usize),
    #[error("form degree overflow: {0} + {1} > 6")]
    DegreeOverflow(usize, usize),
    #[error("singular matrix at base point: {0}")]
    Singular(&'static str),
    #[error("linearly dependent triple: {0}")]
    DependentTriple(&'static str),
    #[error("distribution is degenerate at the base point (sigma_min/sigma_max = {ratio:e})")]
    Degenerate { ratio: f64 },
    #[error("inconsistent linear system in {system}: residual {residual:e}")]
    Inconsistent { system: &'static str, residual: f64 },
    #[error("unexpected gauge dimension {found} (expected {expected})")]
    GaugeDimension { expected: usize, found: usize },
    #[error("pipeline integrity failure: {0}")]
    Integrity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
