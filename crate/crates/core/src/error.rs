use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("genotype value {value} at row {row}, column {column} is not an allele dose in {{0, 1, 2}}")]
    InvalidGenotype {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariate mismatch: {0}")]
    CovariateMismatch(&'static str),

    #[error("interaction terms are not enabled for this model")]
    InteractionDisabled,

    #[error("{0}")]
    Precondition(String),

    #[error("log-density is not finite at every attempted point")]
    NonFiniteDensity,

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
