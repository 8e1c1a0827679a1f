use thiserror::Error;

/// Unified error type for grid construction, configuration, i/o and runtime failures.
#[derive(Debug, Error)]
pub enum FksError {
    #[error("config error: {0}")]
    Config(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("degenerate state in cell {cell}: {reason}")]
    Degenerate { cell: usize, reason: String },

    #[error("instability at step {step} (t = {t:.6e}): {reason}")]
    Instability { step: u64, t: f64, reason: String },

    #[error("numerical inconsistency: {0}")]
    Internal(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FksError>;
