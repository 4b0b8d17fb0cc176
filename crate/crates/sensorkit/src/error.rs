use std::io;
use std::path::{Path, PathBuf};

use sensorkit_core::Error as CoreError;

/// Process exit status for each error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Format = 2,
    Numeric = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}", path = .path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{path}: byte {offset}: {detail}", path = .path.display())]
    Format { path: PathBuf, offset: u64, detail: String },

    #[error("{path}: {key}: {detail}", path = .path.display())]
    Config { path: PathBuf, key: String, detail: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl ToolError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        ToolError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            ToolError::Usage(_) => ExitCode::Usage,
            ToolError::Io { .. } | ToolError::Format { .. } | ToolError::Config { .. } => ExitCode::Format,
            ToolError::Core(CoreError::Config(_)) => ExitCode::Format,
            ToolError::Core(_) => ExitCode::Numeric,
        }
    }
}

/// Decoding failure before a path is attached.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("byte {offset}: {detail}")]
pub struct DecodeError {
    pub offset: u64,
    pub detail: String,
}

impl DecodeError {
    pub fn new(offset: impl TryInto<u64>, detail: impl Into<String>) -> Self {
        Self { offset: offset.try_into().unwrap_or(u64::MAX), detail: detail.into() }
    }

    pub fn at(self, path: &Path) -> ToolError {
        ToolError::Format { path: path.to_path_buf(), offset: self.offset, detail: self.detail }
    }
}

pub type ToolResult<T> = Result<T, ToolError>;
