use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpotError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter `{0}` has a zero-width range")]
    ZeroRange(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("configuration key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error("algorithm run failed for config {config}: {msg}")]
    Run { config: u64, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SpotError>;

impl SpotError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        SpotError::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SpotError::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpotError::Io {
            path: path.into(),
            source,
        }
    }
}
