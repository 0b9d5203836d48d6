use thiserror::Error;

#[derive(Debug, Error)]
pub enum DoaError {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input violates a structural contract (e.g. a non-Hermitian covariance).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numerical routine failed or produced an unusable result.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DoaError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(DoaError::Domain(msg.into()))
}
