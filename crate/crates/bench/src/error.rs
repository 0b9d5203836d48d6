use doa_core::DoaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl From<DoaError> for BenchError {
    fn from(e: DoaError) -> Self {
        match e {
            DoaError::Numerical(m) => BenchError::Numerical(m),
            DoaError::Io(source) => BenchError::Io { context: "i/o".into(), source },
            other => BenchError::Config(other.to_string()),
        }
    }
}

impl BenchError {
    /// Process exit code: 3 for numerical aborts, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn io_context<T>(r: std::io::Result<T>, context: impl FnOnce() -> String) -> Result<T> {
    r.map_err(|source| BenchError::Io { context: context(), source })
}
