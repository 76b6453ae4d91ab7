//! File formats, parallel simulation and the command-line driver built on
//! `csgcheck-core`.

pub mod cli;
pub mod interchange;
pub mod simulation;
pub mod strategy_file;

use std::path::PathBuf;

use thiserror::Error;

/// Failures reading or writing the JSON file formats.
#[derive(Debug, Error)]
pub enum FileError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] csgcheck_core::Error),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FileError {
    pub fn schema(message: String) -> Self {
        FileError::Schema(message)
    }
}

/// Reads a file, naming it in the error.
pub fn read_file(path: &std::path::Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io { path: path.to_path_buf(), source })
}

/// Writes a file, naming it in the error.
pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), FileError> {
    std::fs::write(path, contents).map_err(|source| FileError::Io { path: path.to_path_buf(), source })
}
