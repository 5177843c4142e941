use alloc::string::String;

/// Errors reported by the bound computations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("no violation possible: {0}")]
    NoViolationPossible(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
