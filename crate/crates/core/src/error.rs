use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor extents or channel counts do not line up.
    #[error("shape error: {0}")]
    Shape(String),
    /// A caller broke an operation's contract (wrong tape, non-scalar loss, ...).
    #[error("contract error: {0}")]
    Contract(String),
    #[error("config error: {0}")]
    Config(String),
    /// Malformed binary or text input, with the byte offset where decoding failed.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}

pub(crate) fn contract_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
