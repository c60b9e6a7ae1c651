use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("insufficient measurements: m = {m} < n = {n}")]
    InsufficientMeasurements { m: usize, n: usize },

    #[error("covariance error: {0}")]
    Covariance(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate observations: y is identically zero")]
    DegenerateObservations,

    #[error("singular system: {0}")]
    Singular(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
