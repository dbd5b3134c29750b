use crate::integrate::Trajectory;

/// Errors raised by the library. Each variant maps onto a CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("criterion inapplicable: {0}")]
    Inapplicable(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("degenerate frequencies: {0}")]
    Degenerate(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("integration failure: {message}")]
    Integration {
        message: String,
        partial: Box<Trajectory>,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for bad input, 3 for numeric trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Integration { .. } | Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
