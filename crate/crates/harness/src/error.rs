use std::path::PathBuf;

use thiserror::Error;

/// Harness failures, grouped by process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("malformed CSV {path}: {message}")]
    MalformedCsv { path: PathBuf, message: String },

    #[error("time column is not strictly increasing at row {row}")]
    NonMonotonicTime { row: usize },

    #[error("series lengths differ: {estimates} estimates vs {truth} truth samples")]
    LengthMismatch { estimates: usize, truth: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(#[from] mmsrckf_core::Error),
}

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::MalformedCsv { .. }
            | Self::NonMonotonicTime { .. }
            | Self::LengthMismatch { .. }
            | Self::Io { .. } => 3,
            Self::Numerical(mmsrckf_core::Error::InvalidConfig(_)) => 2,
            Self::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
