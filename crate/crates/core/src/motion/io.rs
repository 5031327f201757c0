//! JSON motion files.
//!
//! ```text
//! {
//!   "format": "humanflow-motion",
//!   "version": 1,
//!   "id": "walk_003",
//!   "category": "walk",
//!   "fps": 12.0,
//!   "joint_names": ["pelvis", ...],
//!   "frames": [{"root_translation": [x, y, z], "joint_rotations": [[ax, ay, az], ...]}, ...]
//! }
//! ```
//!
//! Joint names must match the model's skeleton in count and order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MotionSequence;
use crate::body_model::{BodyModel, PoseFrame};
use crate::error::{invalid, io_err, Error, Result};
use crate::scalar::Real;

pub const MOTION_SCHEMA_VERSION: u32 = 1;
const MOTION_FORMAT: &str = "humanflow-motion";

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct MotionFile<T> {
    format: String,
    version: u32,
    id: String,
    category: String,
    fps: f64,
    joint_names: Vec<String>,
    frames: Vec<PoseFrame<T>>,
}

impl<T: Real> MotionSequence<T> {
    pub fn to_json(&self, model: &BodyModel<T>) -> Result<String> {
        self.check_against(model)?;
        let file = MotionFile {
            format: MOTION_FORMAT.to_string(),
            version: MOTION_SCHEMA_VERSION,
            id: self.id.clone(),
            category: self.category.clone(),
            fps: self.fps,
            joint_names: model.joint_names.clone(),
            frames: self.frames.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str, model: &BodyModel<T>) -> Result<Self> {
        let file: MotionFile<T> = serde_json::from_str(text)?;
        if file.format != MOTION_FORMAT {
            return invalid(format!("not a motion file (format {:?})", file.format));
        }
        if file.version != MOTION_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: file.version,
                expected: MOTION_SCHEMA_VERSION,
            });
        }
        if file.joint_names.len() != model.num_joints() {
            return Err(Error::Asset(format!(
                "motion {:?} has {} joints, model has {}",
                file.id,
                file.joint_names.len(),
                model.num_joints()
            )));
        }
        if let Some(k) = (0..file.joint_names.len()).find(|&k| file.joint_names[k] != model.joint_names[k]) {
            return Err(Error::Asset(format!(
                "motion {:?} joint {k} is {:?}, model expects {:?}",
                file.id, file.joint_names[k], model.joint_names[k]
            )));
        }
        let seq = MotionSequence {
            id: file.id,
            category: file.category,
            fps: file.fps,
            frames: file.frames,
        };
        seq.check_against(model)?;
        Ok(seq)
    }

    pub fn save(&self, path: impl AsRef<Path>, model: &BodyModel<T>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json(model)?).map_err(io_err(path))
    }

    pub fn load(path: impl AsRef<Path>, model: &BodyModel<T>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text, model)
    }

    fn check_against(&self, model: &BodyModel<T>) -> Result<()> {
        self.validate()?;
        if self.num_joints() != model.num_joints() {
            return Err(Error::Asset(format!(
                "motion {:?} has {} joints per frame, model has {}",
                self.id,
                self.num_joints(),
                model.num_joints()
            )));
        }
        Ok(())
    }
}
