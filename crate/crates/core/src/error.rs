use thiserror::Error;

/// Errors raised by the chain toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (out-of-range site, malformed
    /// configuration, mismatched dimensions).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to meet its accuracy contract.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A scenario configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
