use std::io;

use thiserror::Error;

pub type Result<T, E = HvdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HvdError {
    #[error(transparent)]
    Core(#[from] hvd_core::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("invalid data: {0}")]
    Data(String),
    /// Stored index or config disagrees with the encoder configuration.
    #[error("store/config mismatch: {0}")]
    Mismatch(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Usage(String),
    #[error("enrichment service: {0}")]
    Enrichment(String),
}

impl HvdError {
    /// Process exit code: 1 usage, 2 data, 3 store/config mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            HvdError::Usage(_) => 1,
            HvdError::Mismatch(_) | HvdError::Core(hvd_core::Error::RegistryMismatch { .. }) => 3,
            _ => 2,
        }
    }
}
