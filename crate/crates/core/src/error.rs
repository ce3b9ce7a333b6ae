use thiserror::Error;

/// Errors raised by the model-fitting and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("rate positivity: {0}")]
    RatePositivity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dimension(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
