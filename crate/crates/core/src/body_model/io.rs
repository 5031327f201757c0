//! JSON model files.
//!
//! ```text
//! {
//!   "format": "humanflow-body-model",
//!   "version": 1,
//!   "model": {
//!     "name": "...",
//!     "joint_names": ["pelvis", ...],
//!     "parent": [null, 0, ...],
//!     "finger_joints": [24, ...],
//!     "template_vertices": [[x, y, z], ...],          // meters
//!     "faces": [[i, j, k], ...],
//!     "shape_basis": [[[dx, dy, dz], ...], ...],      // [coefficient][vertex]
//!     "joint_regressor": [[[vertex, weight], ...], ...],
//!     "skin_weights": [[[joint, weight], ...], ...],
//!     "uv_coords": [[u, v], ...],
//!     "parts": [{"id": 1, "name": "pelvis"}, ...],
//!     "part_of_face": [1, ...],
//!     "part_adjacency": [[1, 2], ...]
//!   }
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BodyModel;
use crate::error::{io_err, Error, Result};
use crate::scalar::Real;

pub const MODEL_SCHEMA_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "humanflow-body-model";

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ModelFile<T> {
    format: String,
    version: u32,
    model: BodyModel<T>,
}

impl<T: Real> BodyModel<T> {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_SCHEMA_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parses and validates a model document.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format != MODEL_FORMAT {
            return Err(Error::InvalidArgument(format!(
                "not a body model file (format {:?})",
                header.format
            )));
        }
        if header.version != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: header.version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let file: ModelFile<T> = serde_json::from_str(text)?;
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }
}
