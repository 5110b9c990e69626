use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("non-finite value at coordinate {index}")]
    NonFinite { index: usize },

    #[error("invalid compressor parameter: {0}")]
    InvalidParameter(String),

    #[error("{operator} is undefined on the zero vector")]
    ZeroVector { operator: &'static str },

    #[error("invalid class parameters: {0}")]
    InvalidClassParams(String),

    #[error("class estimation failed: {0}")]
    Estimation(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
