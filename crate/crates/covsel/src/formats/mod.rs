//! On-disk formats. Files hold fractions; only rendered tables use percent.

pub mod analysis;
pub mod covering;
pub mod directory;
pub mod features;
pub mod regret;

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, creating parent directories.
pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialisation cannot fail");
    s.push('\n');
    s
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_string(path, &to_json(value))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

/// Maps a csv error to a parse error carrying its line number.
pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    if err.is_io_error() {
        if let csv::ErrorKind::Io(io) = err.into_kind() {
            return Error::io(path, io);
        }
        unreachable!("is_io_error implies an Io kind");
    }
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::parse(path, line, err.to_string())
}
