use thiserror::Error;

/// Errors raised by model construction, evaluation and the simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the validity region: {0}")]
    OutOfRegion(String),

    #[error("degenerate point: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("slice shortfall: requested {requested} observations, found {achieved}")]
    Shortfall { requested: usize, achieved: usize },

    #[error("no built-in critical value for d = {dim}, alpha = {alpha}; use a Monte Carlo source")]
    UnavailableBuiltin { dim: usize, alpha: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
