//! Dataset driver: JSON config, deterministic per-subsequence seeds,
//! generation over splits, manifests, replay, audits and flow evaluation.

mod audit;
mod eval;
mod generate;

pub use audit::{audit, AuditCheck, AuditReport};
pub use eval::{eval_dirs, write_csv, EvalRow, EvalTable};
pub use generate::{generate, render_files, replay, RenderedFile};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};
use crate::scene::{AssetSplits, Mode, ModeParams};
use crate::texture_lab::Split;

pub const MANIFEST_FORMAT: &str = "humanflow-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Subsequences requested per split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    #[serde(default)]
    pub train: usize,
    #[serde(default)]
    pub val: usize,
    #[serde(default)]
    pub test: usize,
}

impl Counts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Pool sizes used when an asset source is not given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProceduralCounts {
    /// Body textures per (collection, gender).
    pub body_textures: usize,
    pub hand_textures: usize,
    pub backgrounds: usize,
    pub motions: usize,
    pub hand_motions: usize,
}

impl Default for ProceduralCounts {
    fn default() -> Self {
        Self {
            body_textures: 5,
            hand_textures: 10,
            backgrounds: 10,
            motions: 20,
            hand_motions: 10,
        }
    }
}

/// Asset sources. Relative paths resolve against the config file's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssetConfig {
    /// Texture manifest (JSON); kinds it lists replace the procedural pool.
    pub textures: Option<PathBuf>,
    /// Directory of background images.
    pub backgrounds: Option<PathBuf>,
    /// Directory of motion JSON files.
    pub motions: Option<PathBuf>,
    pub hand_motions: Option<PathBuf>,
    /// Body model JSON; the built-in humanoid otherwise.
    pub model: Option<PathBuf>,
    /// Use the low-resolution built-in humanoid.
    pub coarse_model: bool,
    pub procedural: ProceduralCounts,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub image_width: Option<u32>,
    pub image_height: Option<u32>,
    pub focal: Option<f64>,
    pub billboard_depth: Option<f64>,
    pub subsequence_length: Option<usize>,
    pub actors: Option<(usize, usize)>,
    pub shape_bound: Option<f64>,
    pub gaussian_blur_probability: Option<f64>,
    pub camera_noise_probability: Option<f64>,
    pub motion_blur: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub counts: Counts,
    #[serde(default)]
    pub assets: AssetConfig,
    #[serde(default)]
    pub overrides: Overrides,
    /// Render threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

impl GenConfig {
    pub fn new(mode: Mode, counts: Counts) -> Self {
        Self {
            mode,
            seed: 0,
            out: None,
            counts,
            assets: AssetConfig::default(),
            overrides: Overrides::default(),
            workers: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses the file and resolves relative asset paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let a = &mut cfg.assets;
        for p in [&mut a.textures, &mut a.backgrounds, &mut a.motions, &mut a.hand_motions, &mut a.model]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    /// Mode defaults with the overrides applied, validated.
    pub fn params(&self) -> Result<ModeParams> {
        let mut p = ModeParams::for_mode(self.mode);
        let o = &self.overrides;
        if let Some(v) = o.image_width {
            p.image_width = v;
        }
        if let Some(v) = o.image_height {
            p.image_height = v;
        }
        if let Some(v) = o.focal {
            p.focal = v;
        }
        if let Some(v) = o.billboard_depth {
            p.billboard_depth = v;
        }
        if let Some(v) = o.subsequence_length {
            p.subsequence_length = v;
        }
        if let Some(v) = o.actors {
            p.actors = v;
        }
        if let Some(v) = o.shape_bound {
            p.shape_bound = v;
        }
        if let Some(v) = o.gaussian_blur_probability {
            p.gaussian_blur_probability = v;
        }
        if let Some(v) = o.camera_noise_probability {
            p.camera_noise_probability = v;
        }
        if let Some(v) = o.motion_blur {
            p.motion_blur = v;
        }
        p.validate()?;
        if p.billboard_depth <= p.actor_depth.1 {
            p.actor_depth.1 = p.billboard_depth - 1.0;
            if p.actor_depth.1 < p.actor_depth.0 {
                return Err(Error::InvalidArgument(format!(
                    "billboard depth {} leaves no room for actors",
                    p.billboard_depth
                )));
            }
        }
        Ok(p)
    }
}

/// First 8 bytes (little-endian) of `sha256(root LE ‖ split ‖ index LE)`.
pub fn subsequence_seed(root: u64, split: Split, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(split.to_string().as_bytes());
    h.update((index as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed of a named auxiliary stream (asset splits, procedural motions).
pub fn stream_seed(root: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(b"/");
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the manifest directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub split: Split,
    pub index: usize,
    pub seed: u64,
    pub scene: FileRecord,
    pub rgb: Vec<FileRecord>,
    pub flow: Vec<FileRecord>,
    pub seg: Vec<FileRecord>,
}

impl ManifestEntry {
    pub fn files(&self) -> impl Iterator<Item = &FileRecord> {
        std::iter::once(&self.scene).chain(&self.rgb).chain(&self.flow).chain(&self.seg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub split: Split,
    pub index: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub format_version: u32,
    pub engine_version: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub root_seed: u64,
    pub counts: Counts,
    pub params: ModeParams,
    pub asset_splits: AssetSplits,
    pub entries: Vec<ManifestEntry>,
    pub skipped: Vec<SkippedEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::InvalidArgument(format!("{} is not a dataset manifest", path.display())));
        }
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::SchemaVersion {
                found: m.format_version,
                expected: MANIFEST_VERSION,
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(io_err(path))
    }
}
