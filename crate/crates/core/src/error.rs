use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("negative density {value} at {at}")]
    NegativeDensity { at: f64, value: f64 },

    #[error("density is NaN at {at}")]
    NotANumber { at: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("conditioning quantity is not sigma-finite ({0})")]
    NotSigmaFinite(String),

    #[error("conditional slice has zero mass")]
    ZeroSlice,

    #[error("conditional slice has infinite mass")]
    DivergentSlice,

    #[error("evidence integral is zero")]
    ZeroEvidence,

    #[error("argument outside the model domain: {0}")]
    DomainError(String),

    #[error("reference test function has zero integral against measure at index {index}")]
    ReferenceDegenerate { index: f64 },

    #[error("invalid size {0}; need at least 2")]
    InvalidSize(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("first increment is zero")]
    ZeroFirstIncrement,
}

pub type Result<T> = std::result::Result<T, Error>;
