use std::path::{Path, PathBuf};

use thiserror::Error;

/// Front-end failure, split by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// A file could not be read or written (exit code 2).
    #[error("{action} `{path}`: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },

    /// Inputs were readable but invalid (exit code 1).
    #[error("{context}: {source}")]
    Validation {
        context: String,
        source: dephaser::Error,
    },

    /// Invalid configuration or flag combination (exit code 1).
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Validation { .. } | CliError::Config(_) => 1,
        }
    }

    pub fn read(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { action: "cannot read", path: path.to_path_buf(), source }
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { action: "cannot write", path: path.to_path_buf(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches context to library errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for dephaser::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Validation { context: what(), source })
    }
}
