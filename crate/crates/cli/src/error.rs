use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] levi_core::Error),

    #[error("malformed report: {0}")]
    Report(String),

    #[error("unsupported report schema version {found} (supported: {supported})")]
    Schema { found: u64, supported: u64 },

    #[error("command mismatch: config says `{config}`, invoked as `{invoked}`")]
    CommandMismatch { config: String, invoked: String },
}

impl CliError {
    /// Validation error attached to a config field path.
    pub fn field(path: &str, message: impl std::fmt::Display) -> Self {
        CliError::Config {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
