//! The replay unit: every sampled quantity needed to render a subsequence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::assets::{AssetRefs, ModelRef};
use super::camera::{Camera, CameraNoise};
use super::lighting::ShLighting;
use super::Mode;
use crate::body_model::ShapeVector;
use crate::collision::Plane;
use crate::error::{invalid, io_err, Error, Result};
use crate::math::Vec3;
use crate::motion::Subsequence;
use crate::texture_lab::Split;

pub const SCENE_SCHEMA_VERSION: u32 = 1;

/// Ground placement of an actor's frame-0 root: position on y = 0 and yaw
/// about +y (rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub x: f64,
    pub z: f64,
    pub yaw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorSpec {
    pub shape: ShapeVector<f64>,
    pub texture_id: String,
    /// Matched hand texture whose shifted copy replaces the hand regions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_texture_id: Option<String>,
    pub motion: Subsequence<f64>,
    /// Source of the spliced finger motion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand_motion_id: Option<String>,
    pub placement: Placement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub texture_id: String,
    /// Distance from the frame-0 camera center to the billboard plane (m).
    pub depth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Degrade {
    pub motion_blur: bool,
    pub gaussian_blur_sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub schema_version: u32,
    pub mode: Mode,
    pub split: Split,
    pub index: usize,
    pub seed: u64,
    pub model: ModelRef,
    #[serde(default)]
    pub assets: AssetRefs,
    pub n_frames: usize,
    /// Sampled actor count before any placement failures.
    pub requested_actors: usize,
    /// Frame-0 camera; later frames add `camera_noise`.
    pub camera: Camera,
    pub camera_noise: Option<CameraNoise>,
    pub lighting: ShLighting,
    pub background: Background,
    pub degrade: Degrade,
    pub actors: Vec<ActorSpec>,
}

impl SceneSpec {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a spec, rejecting other schema versions before anything else.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(text)?;
        if v.schema_version != SCENE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: v.schema_version,
                expected: SCENE_SCHEMA_VERSION,
            });
        }
        let spec: SceneSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
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

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        if self.n_frames < 2 {
            return invalid("a subsequence needs at least 2 frames");
        }
        if !(self.background.depth > 0.0 && self.background.depth.is_finite()) {
            return invalid("billboard depth must be positive");
        }
        if let Some(n) = &self.camera_noise {
            if n.deltas.len() + 1 != self.n_frames {
                return invalid(format!(
                    "camera noise has {} transitions for {} frames",
                    n.deltas.len(),
                    self.n_frames
                ));
            }
        }
        if let Some(s) = self.degrade.gaussian_blur_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return invalid("Gaussian blur sigma must be positive");
            }
        }
        for (i, a) in self.actors.iter().enumerate() {
            if a.motion.frames.len() != self.n_frames {
                return invalid(format!(
                    "actor {i} has {} motion frames, scene has {}",
                    a.motion.frames.len(),
                    self.n_frames
                ));
            }
            if a.motion.frames.iter().any(|f| !f.is_finite()) {
                return invalid(format!("actor {i} motion is not finite"));
            }
        }
        Ok(())
    }

    /// Camera at `frame`, including accumulated noise.
    pub fn camera_at(&self, frame: usize) -> Camera {
        match &self.camera_noise {
            Some(n) => {
                let (t, e) = n.accumulated(frame);
                self.camera.perturbed(t, e)
            }
            None => self.camera,
        }
    }

    /// World z of the background billboard.
    pub fn billboard_z(&self) -> f64 {
        self.camera.center().z + self.background.depth
    }

    /// Half-space beyond the billboard.
    pub fn billboard_plane(&self) -> Plane<f64> {
        Plane {
            normal: Vec3::new(0.0, 0.0, 1.0),
            offset: self.billboard_z(),
        }
    }
}
