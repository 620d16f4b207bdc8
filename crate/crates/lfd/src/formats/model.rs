//! TP-GMM model JSON: `{"version":1,"K":..,"P":..,"D":..,"pi":[..],"Z_mu":[..],"Z_sigma":[..]}`.
//!
//! `Z_mu[i][j]` is the `(t, x, y)` mean of component `i` in frame `j`, `Z_sigma[i][j]`
//! the matching 3×3 covariance (row-major nested arrays). Numbers are written in
//! the shortest form that parses back to the same `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tabletop_core::linalg::{Mat3, Vec3};
use tabletop_core::tpgmm::{TpGmmModel, SPATIAL_DIM};

use super::{read_text, write_text};
use crate::LfdError;

pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "D")]
    d: usize,
    pi: Vec<f64>,
    #[serde(rename = "Z_mu")]
    z_mu: Vec<Vec<Vec3>>,
    #[serde(rename = "Z_sigma")]
    z_sigma: Vec<Vec<Mat3>>,
}

pub fn model_to_json(model: &TpGmmModel) -> String {
    let file = ModelFile {
        version: MODEL_VERSION,
        k: model.k(),
        p: model.p(),
        d: SPATIAL_DIM,
        pi: model.priors().to_vec(),
        z_mu: model.means().to_vec(),
        z_sigma: model.covariances().to_vec(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json(text: &str, path: &Path) -> Result<TpGmmModel, LfdError> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| LfdError::parse(path, e.to_string()))?;
    match raw.get("version").and_then(serde_json::Value::as_u64) {
        Some(MODEL_VERSION) => {}
        Some(found) => return Err(LfdError::SchemaVersionMismatch { path: path.to_path_buf(), found, expected: MODEL_VERSION }),
        None => return Err(LfdError::parse(path, "missing integer \"version\"")),
    }
    let file: ModelFile = serde_json::from_value(raw).map_err(|e| LfdError::parse(path, e.to_string()))?;
    if file.d != SPATIAL_DIM {
        return Err(LfdError::InvariantViolation(format!("{}: D = {}, expected {SPATIAL_DIM}", path.display(), file.d)));
    }
    if file.pi.len() != file.k || file.z_mu.len() != file.k || file.z_mu.iter().any(|m| m.len() != file.p) {
        return Err(LfdError::InvariantViolation(format!("{}: K/P do not match the parameter arrays", path.display())));
    }
    Ok(TpGmmModel::new(file.pi, file.z_mu, file.z_sigma)?)
}

pub fn read_model(path: &Path) -> Result<TpGmmModel, LfdError> {
    model_from_json(&read_text(path)?, path)
}

pub fn write_model(path: &Path, model: &TpGmmModel) -> Result<(), LfdError> {
    write_text(path, &model_to_json(model))
}
