//! Readers and writers for every file the toolkit exchanges.

pub mod calibration;
pub mod colors;
pub mod manifest;
pub mod model;
pub mod png;
pub mod trajectory;

use std::path::Path;

use crate::LfdError;

pub(crate) fn read_text(path: &Path) -> Result<String, LfdError> {
    std::fs::read_to_string(path).map_err(|e| LfdError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), LfdError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| LfdError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| LfdError::io(path, e))
}
