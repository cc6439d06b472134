use thiserror::Error;

/// Errors produced by the urn, dynamics and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is reducible; an irreducible matrix is required")]
    Reducible,

    #[error("power iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("integration produced a non-finite state at t = {time}")]
    Integration { time: f64 },

    #[error("generator contract violated: {0}")]
    GeneratorContract(String),

    #[error("sequence exhausted at index {available}; more data is needed")]
    NeedsMoreData { available: usize },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
