use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{path}: integrity check failed: {message}")]
    Integrity { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] zge_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

/// Process exit codes by failure category.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Parse { .. } | CliError::Data { .. } | CliError::Integrity { .. } => exit::DATA,
            CliError::Core(e) if e.is_numeric() => exit::NUMERIC,
            CliError::Core(zge_core::Error::InvalidDataset(_) | zge_core::Error::EmptyClass(_)) => exit::DATA,
            CliError::Core(zge_core::Error::DimensionMismatch { .. }) => exit::OTHER,
            CliError::Core(_) => exit::CONFIG,
            CliError::Io { .. } | CliError::Other(_) => exit::OTHER,
        }
    }
}
