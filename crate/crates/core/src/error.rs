use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("network is disconnected: {0}")]
    Disconnected(String),

    #[error("size cap exceeded: {got} vertices > cap {cap}; {hint}")]
    SizeCap { got: usize, cap: usize, hint: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
