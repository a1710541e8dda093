use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipError {
    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Malformed external input (files, edge lists, CLI values).
    #[error("invalid input: {0}")]
    Input(String),
    /// An internal structure was found corrupted.
    #[error("invariant broken: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PipError>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(PipError::Contract(msg.into()))
}
