//! File access with path-qualified errors and all-or-nothing writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{ToolError, ToolResult};

pub fn read_bytes(path: &Path) -> ToolResult<Vec<u8>> {
    fs::read(path).map_err(|e| ToolError::io(path, e))
}

pub fn read_text(path: &Path) -> ToolResult<String> {
    fs::read_to_string(path).map_err(|e| ToolError::io(path, e))
}

fn stage(path: &Path, bytes: &[u8]) -> ToolResult<NamedTempFile> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| ToolError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| ToolError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| ToolError::io(path, e))?;
    Ok(tmp)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> ToolResult<()> {
    write_all_atomic(&[(path.to_path_buf(), bytes.to_vec())])
}

/// Stages every file before renaming any of them, so a failure while
/// writing leaves none of the outputs behind.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> ToolResult<()> {
    let staged = files
        .iter()
        .map(|(path, bytes)| stage(path, bytes).map(|tmp| (path, tmp)))
        .collect::<ToolResult<Vec<_>>>()?;
    for (path, tmp) in staged {
        tmp.persist(path).map_err(|e| ToolError::io(path, e.error))?;
    }
    Ok(())
}
