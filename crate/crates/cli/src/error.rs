use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] champagne::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 3 for numerical refusals, 2 for everything the caller can fix.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_refusal() => 3,
            _ => 2,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
