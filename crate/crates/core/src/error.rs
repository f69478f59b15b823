use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its mathematical domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// An operation was called in a state where it is undefined.
    #[error("usage error: {0}")]
    Usage(String),
    /// The requested quantity only exists in a different regime.
    #[error("regime error: {0}")]
    Regime(String),
    /// Not enough data to form the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unknown check `{0}`; valid names: {1}")]
    UnknownCheck(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }
}
