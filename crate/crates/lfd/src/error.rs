use std::path::{Path, PathBuf};

use tabletop_core::augment::AugmentError;
use tabletop_core::dataset::DatasetError;
use tabletop_core::geometry::GeometryError;
use tabletop_core::perception::PerceptionError;
use tabletop_core::simulator::SimError;
use tabletop_core::tpgmm::TpGmmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LfdError {
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: schema version {found}, expected {expected}", path.display())]
    SchemaVersionMismatch { path: PathBuf, found: u64, expected: u64 },
    #[error("{0}")]
    InvariantViolation(String),
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    TpGmm(#[from] TpGmmError),
    #[error(transparent)]
    Simulator(#[from] SimError),
    #[error(transparent)]
    Dataset(DatasetError),
}

impl From<DatasetError> for LfdError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvariantViolation(m) => LfdError::InvariantViolation(m),
            other => LfdError::Dataset(other),
        }
    }
}

impl LfdError {
    pub fn code(&self) -> &'static str {
        match self {
            LfdError::MissingFile(_) => "MissingFile",
            LfdError::SchemaVersionMismatch { .. } => "SchemaVersionMismatch",
            LfdError::InvariantViolation(_) => "InvariantViolation",
            LfdError::Parse { .. } => "ParseError",
            LfdError::Io { .. } => "IoError",
            LfdError::InvalidArgument(_) => "InvalidArgument",
            LfdError::Geometry(e) => e.code(),
            LfdError::Augment(e) => e.code(),
            LfdError::Perception(e) => e.code(),
            LfdError::TpGmm(e) => e.code(),
            LfdError::Simulator(e) => e.code(),
            LfdError::Dataset(e) => e.code(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            LfdError::MissingFile(path.to_path_buf())
        } else {
            LfdError::Io { path: path.to_path_buf(), source }
        }
    }

    pub(crate) fn parse(path: &Path, message: impl Into<String>) -> Self {
        LfdError::Parse { path: path.to_path_buf(), message: message.into() }
    }
}
