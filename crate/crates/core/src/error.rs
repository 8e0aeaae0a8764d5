use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("above root: cube {cube} has no ancestor {levels} generations up")]
    AboveRoot { cube: String, levels: u32 },

    #[error("depth overflow: generation {requested} exceeds the available depth {available}")]
    DepthOverflow { requested: u32, available: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid split sequence: {0}")]
    InvalidSplit(String),

    #[error("measure is not the product of the given factors (first mismatch at {0})")]
    NonProductMeasure(String),

    #[error("Haar function at {cube} rejected: {reason}")]
    InvalidHaarFunction { cube: String, reason: String },

    #[error("cube {0} is not in the support of the system")]
    NotInSupport(String),

    #[error("operation requires a cancellative system")]
    NonCancellative,

    #[error("nonzero coefficient on zero-mass cube {0}")]
    ZeroMassCoefficient(String),

    #[error("lambda below global average: lambda = {lambda} must exceed the root average {average}")]
    LambdaBelowAverage { lambda: f64, average: f64 },

    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error("invalid cube family: {0}")]
    InvalidFamily(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
