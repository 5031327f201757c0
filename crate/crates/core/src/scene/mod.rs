//! Scene composition: cameras, lighting, per-subsequence parameter sampling,
//! collision-free actor placement and the replayable [`SceneSpec`].
//!
//! World frame: y up, ground plane y = 0, cameras look along +z. Camera
//! coordinates follow the pinhole convention x right, y down, z forward.

mod assets;
mod camera;
mod compose;
mod lighting;
mod place;
mod spec;

pub use assets::{AssetPools, AssetRefs, AssetSplits, BodyTextureInfo, ModelRef};
pub use camera::{Camera, CameraDelta, CameraNoise, Intrinsics, NEAR_PLANE};
pub use compose::{compose_subsequence, sample_parameters, ActorDraw, ComposeContext, SampledParameters};
pub use lighting::{sample_lighting, sh_basis, ShLighting, SH_COEFFS};
pub use place::{
    actor_transform, ground_region, place_actors, pose_actor_frames, pose_local, shof_camera, world_frames, Candidate,
    GroundRegion, MAX_PLACEMENT_TRIES,
};
pub use spec::{
    ActorSpec, Background, Degrade, Placement, SceneSpec, SCENE_SCHEMA_VERSION,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Shof,
    Mhof,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Shof => "shof",
            Mode::Mhof => "mhof",
        }
    }
}

/// How source motion is thinned before splitting into subsequences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsample {
    Stride(usize),
    TargetFps(f64),
}

/// The per-mode parameter matrix. Defaults follow the two dataset modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeParams {
    pub mode: Mode,
    pub image_width: u32,
    pub image_height: u32,
    pub focal: f64,
    /// Camera height above the ground (m); SHOF overrides it per scene.
    pub camera_height: f64,
    pub billboard_depth: f64,
    pub subsequence_length: usize,
    pub shape_bound: f64,
    /// Inclusive actor-count range.
    pub actors: (usize, usize),
    /// SHOF actor depth range (m).
    pub actor_depth: (f64, f64),
    /// Nearest allowed actor placement depth (m).
    pub min_depth: f64,
    pub gaussian_blur_probability: f64,
    pub gaussian_blur_sigma: f64,
    pub motion_blur: bool,
    pub camera_noise_probability: f64,
    pub translation_noise_std: f64,
    pub rotation_noise_std_deg: f64,
    pub texture_ratios: [f64; 3],
    pub subsample: Subsample,
    /// Replace hand regions of body textures with matched hand textures.
    pub hand_textures: bool,
    /// Articulated fingers driven by spliced hand motion.
    pub fingers: bool,
}

impl ModeParams {
    pub fn for_mode(mode: Mode) -> Self {
        let common = Self {
            mode,
            image_width: 640,
            image_height: 640,
            focal: 800.0,
            camera_height: 1.0,
            billboard_depth: 12.0,
            subsequence_length: 10,
            shape_bound: 2.7,
            actors: (4, 8),
            actor_depth: (4.0, 7.0),
            min_depth: 3.0,
            gaussian_blur_probability: 0.3,
            gaussian_blur_sigma: 1.0,
            motion_blur: true,
            camera_noise_probability: 0.3,
            translation_noise_std: 0.01,
            rotation_noise_std_deg: 0.0,
            texture_ratios: [0.8, 0.1, 0.1],
            subsample: Subsample::TargetFps(12.0),
            hand_textures: true,
            fingers: true,
        };
        match mode {
            Mode::Mhof => common,
            Mode::Shof => Self {
                billboard_depth: 9.0,
                subsequence_length: 20,
                shape_bound: 3.0,
                actors: (1, 1),
                rotation_noise_std_deg: 0.2,
                texture_ratios: [0.7, 0.0, 0.3],
                subsample: Subsample::Stride(16),
                hand_textures: false,
                fingers: false,
                ..common
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.image_width < 32 || self.image_height < 32 || self.image_width > 8192 || self.image_height > 8192 {
            return invalid(format!("image size {}x{} outside [32, 8192]", self.image_width, self.image_height));
        }
        if !(self.focal > 0.0 && self.focal.is_finite()) {
            return invalid("focal length must be positive");
        }
        if !(self.billboard_depth > self.min_depth && self.billboard_depth <= 1000.0) {
            return invalid("billboard depth must exceed the minimum actor depth");
        }
        if self.subsequence_length < 2 || self.subsequence_length > 10_000 {
            return invalid("subsequence length must be in [2, 10000]");
        }
        if !(self.shape_bound > 0.0 && self.shape_bound <= 10.0) {
            return invalid("shape bound must be in (0, 10]");
        }
        if self.actors.0 == 0 || self.actors.0 > self.actors.1 || self.actors.1 > 64 {
            return invalid("actor range must satisfy 1 <= min <= max <= 64");
        }
        if !(self.actor_depth.0 >= self.min_depth && self.actor_depth.0 <= self.actor_depth.1) {
            return invalid("actor depth range must start at or beyond the minimum depth");
        }
        if !(prob(self.gaussian_blur_probability) && prob(self.camera_noise_probability)) {
            return invalid("probabilities must lie in [0, 1]");
        }
        if !(self.gaussian_blur_sigma > 0.0 && self.gaussian_blur_sigma <= 20.0) {
            return invalid("Gaussian blur sigma must be in (0, 20]");
        }
        if !(self.translation_noise_std >= 0.0 && self.rotation_noise_std_deg >= 0.0) {
            return invalid("noise standard deviations must be non-negative");
        }
        if self.mode == Mode::Mhof && self.rotation_noise_std_deg != 0.0 {
            log::warn!("rotation noise enabled in mhof mode");
        }
        match self.subsample {
            Subsample::Stride(0) => return invalid("subsampling stride must be at least 1"),
            Subsample::TargetFps(f) if !(f > 0.0) => return invalid("target fps must be positive"),
            _ => {}
        }
        Ok(())
    }

    /// Principal point at the image center.
    pub fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            focal: self.focal,
            cx: self.image_width as f64 / 2.0,
            cy: self.image_height as f64 / 2.0,
            width: self.image_width,
            height: self.image_height,
        }
    }
}

impl Default for ModeParams {
    fn default() -> Self {
        Self::for_mode(Mode::Mhof)
    }
}

/// Actor count uniform over the inclusive range.
pub fn sample_n_actors<R: Rng + ?Sized>(rng: &mut R, range: (usize, usize)) -> usize {
    rng.random_range(range.0..=range.1)
}

/// Camera noise schedule for `n_frames` frames, or `None`.
///
/// MHOF: with the configured probability, every transition gets a
/// translation delta. SHOF: each transition independently gets translation
/// and rotation deltas with that probability.
pub fn sample_camera_noise<R: Rng + ?Sized>(rng: &mut R, params: &ModeParams, n_frames: usize) -> Option<CameraNoise> {
    let p = params.camera_noise_probability;
    let t_std = params.translation_noise_std;
    let r_std = params.rotation_noise_std_deg.to_radians();
    let draw = |rng: &mut R, rotate: bool| {
        let n = |rng: &mut R, s: f64| if s > 0.0 { Normal::new(0.0, s).map_or(0.0, |d| d.sample(rng)) } else { 0.0 };
        let translation = Vec3::new(n(rng, t_std), n(rng, t_std), n(rng, t_std));
        let rotation = if rotate { [n(rng, r_std), n(rng, r_std), n(rng, r_std)] } else { [0.0; 3] };
        CameraDelta { translation, rotation }
    };
    let steps = n_frames.saturating_sub(1);
    match params.mode {
        Mode::Mhof => {
            if !rng.random_bool(p) {
                return None;
            }
            let rotate = params.rotation_noise_std_deg > 0.0;
            Some(CameraNoise {
                deltas: (0..steps).map(|_| Some(draw(rng, rotate))).collect(),
            })
        }
        Mode::Shof => Some(CameraNoise {
            deltas: (0..steps)
                .map(|_| if rng.random_bool(p) { Some(draw(rng, true)) } else { None })
                .collect(),
        }),
    }
}

/// Gaussian-blur sigma with the configured probability.
pub fn sample_gaussian_blur<R: Rng + ?Sized>(rng: &mut R, params: &ModeParams) -> Option<f64> {
    rng.random_bool(params.gaussian_blur_probability)
        .then_some(params.gaussian_blur_sigma)
}
