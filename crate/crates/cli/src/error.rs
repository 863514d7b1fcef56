use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    /// One entry per offending line.
    #[error("{path}: invalid dataset\n{}", .lines.join("\n"))]
    Dataset { path: PathBuf, lines: Vec<String> },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] survcop::Error),
    #[error("could not serialize report: {0}")]
    Report(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
