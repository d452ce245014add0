use std::io;

use thiserror::Error;

/// Errors shared by every engine in the crate.
#[derive(Debug, Error)]
pub enum NetfragError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("degenerate unit {unit}: incoming weight sum is zero")]
    DegenerateUnit { unit: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical failure at epoch {epoch}: {detail}")]
    NumericalFailure { epoch: usize, detail: String },

    #[error("config error at key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, NetfragError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(NetfragError::InvalidArgument(msg.into()))
}
