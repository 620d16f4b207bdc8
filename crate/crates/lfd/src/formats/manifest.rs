//! Dataset manifest: one JSON document listing every sample's files.
//!
//! ```json
//! {"version":1,"scale_h":240,"image_size":240,"samples":[{"image":"imgs/000.png","trajectory":"traj/000.csv","dirt_type":"marker"}]}
//! ```
//!
//! Paths are relative to the manifest's directory. `seed` and `colors` are
//! optional provenance fields and are omitted when absent.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tabletop_core::perception::DirtType;

use super::{read_text, write_text};
use crate::LfdError;

pub const MANIFEST_VERSION: u64 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u64,
    #[serde(serialize_with = "integral_when_exact")]
    pub scale_h: f64,
    pub image_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Color configuration file used to segment the images.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<String>,
    pub samples: Vec<ManifestSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub image: String,
    pub trajectory: String,
    #[serde(serialize_with = "dirt_name", deserialize_with = "dirt_from_name")]
    pub dirt_type: DirtType,
}

fn integral_when_exact<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        s.serialize_i64(*v as i64)
    } else {
        s.serialize_f64(*v)
    }
}

fn dirt_name<S: Serializer>(d: &DirtType, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(d.name())
}

fn dirt_from_name<'de, D: Deserializer<'de>>(d: D) -> Result<DirtType, D::Error> {
    let name = String::deserialize(d)?;
    DirtType::from_name(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown dirt type {name:?}")))
}

impl Manifest {
    pub fn new(scale_h: f64, image_size: usize) -> Self {
        Self { version: MANIFEST_VERSION, scale_h, image_size, seed: None, colors: None, samples: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, LfdError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| LfdError::parse(path, e.to_string()))?;
        let version = raw.get("version").and_then(serde_json::Value::as_u64);
        match version {
            Some(MANIFEST_VERSION) => {}
            Some(found) => {
                return Err(LfdError::SchemaVersionMismatch { path: path.to_path_buf(), found, expected: MANIFEST_VERSION })
            }
            None => return Err(LfdError::parse(path, "missing integer \"version\"")),
        }
        serde_json::from_value(raw).map_err(|e| LfdError::parse(path, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, LfdError> {
        Self::from_json(&read_text(path)?, path)
    }

    pub fn write(&self, path: &Path) -> Result<(), LfdError> {
        write_text(path, &self.to_json())
    }
}

/// The directory sample paths are resolved against.
pub fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}
