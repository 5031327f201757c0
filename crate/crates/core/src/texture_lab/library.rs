//! Texture pools: procedural ids plus user textures declared in a manifest.
//!
//! ```text
//! {
//!   "textures": [
//!     {"id": "anna_01", "kind": "body", "gender": "female", "collection": "scans",
//!      "path": "body/anna_01.png", "sample_region": {"x": 96, "y": 20, "width": 24, "height": 16}},
//!     {"id": "hand_03", "kind": "hand", "path": "hands/03.png",
//!      "sample_region": {"x": 40, "y": 200, "width": 8, "height": 8}},
//!     {"id": "office", "kind": "background", "path": "bg/office.png"}
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. A missing
//! sample region means the whole image.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::procedural::procedural_texture;
use super::{Rect, Texture, TextureKind, BODY_COLLECTIONS};
use crate::body_model::{BodyModel, Gender};
use crate::error::{io_err, Error, Result};
use crate::scalar::Real;

/// Ids with this prefix are generated instead of loaded.
pub const PROCEDURAL_PREFIX: &str = "proc:";

fn default_collection() -> String {
    "default".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureEntry {
    pub id: String,
    pub kind: TextureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default = "default_collection")]
    pub collection: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_region: Option<Rect>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TextureManifest {
    pub textures: Vec<TextureEntry>,
}

impl TextureManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut m: TextureManifest =
            serde_json::from_str(&text).map_err(|e| Error::Asset(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.textures {
            if let Some(p) = &e.path {
                if p.is_relative() {
                    e.path = Some(dir.join(p));
                }
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.textures {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Asset(format!("duplicate texture id {:?}", e.id)));
            }
            if e.kind == TextureKind::Body && e.gender.is_none() {
                return Err(Error::Asset(format!("body texture {:?} needs a gender", e.id)));
            }
            if e.path.is_none() && !e.id.starts_with(PROCEDURAL_PREFIX) {
                return Err(Error::Asset(format!("texture {:?} has no path", e.id)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TextureLibrary {
    pub entries: Vec<TextureEntry>,
}

impl TextureLibrary {
    /// `bodies` textures per (collection, gender), plus hand and background pools.
    pub fn procedural(bodies: usize, hands: usize, backgrounds: usize) -> Self {
        let mut entries = Vec::new();
        for collection in BODY_COLLECTIONS {
            for g in Gender::ALL {
                for n in 0..bodies {
                    entries.push(TextureEntry {
                        id: format!("{PROCEDURAL_PREFIX}body:{collection}:{}:{n}", g.as_str()),
                        kind: TextureKind::Body,
                        gender: Some(g),
                        collection: collection.to_string(),
                        path: None,
                        sample_region: None,
                    });
                }
            }
        }
        for (kind, tag, count) in [(TextureKind::Hand, "hand", hands), (TextureKind::Background, "bg", backgrounds)] {
            for n in 0..count {
                entries.push(TextureEntry {
                    id: format!("{PROCEDURAL_PREFIX}{tag}:{n}"),
                    kind,
                    gender: None,
                    collection: "procedural".to_string(),
                    path: None,
                    sample_region: None,
                });
            }
        }
        Self { entries }
    }

    pub fn from_manifest(m: TextureManifest) -> Self {
        Self { entries: m.textures }
    }

    /// Every `.png` in `dir` (sorted by name) as a background entry named by its stem.
    pub fn background_dir(dir: impl AsRef<Path>) -> Result<Vec<TextureEntry>> {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Asset(format!("no PNG backgrounds in {}", dir.display())));
        }
        Ok(paths
            .into_iter()
            .map(|p| TextureEntry {
                id: format!("bg:{}", p.file_stem().unwrap_or_default().to_string_lossy()),
                kind: TextureKind::Background,
                gender: None,
                collection: "user".to_string(),
                path: Some(p),
                sample_region: None,
            })
            .collect())
    }

    /// Replaces every entry of `kind` with `entries`.
    pub fn replace_kind(&mut self, kind: TextureKind, entries: Vec<TextureEntry>) {
        self.entries.retain(|e| e.kind != kind);
        self.entries.extend(entries);
    }

    pub fn entry(&self, id: &str) -> Option<&TextureEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn of_kind(&self, kind: TextureKind) -> impl Iterator<Item = &TextureEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    /// Loads (or regenerates) a texture. Procedural ids need no entry.
    pub fn load<T: Real>(&self, id: &str, model: &BodyModel<T>) -> Result<Texture> {
        let entry = self.entry(id);
        if id.starts_with(PROCEDURAL_PREFIX) && entry.is_none_or(|e| e.path.is_none()) {
            return procedural_texture(id, model).map_err(|e| Error::Asset(e.to_string()));
        }
        let entry = entry.ok_or_else(|| Error::Asset(format!("unknown texture id {id:?}")))?;
        let path = entry
            .path
            .as_ref()
            .ok_or_else(|| Error::Asset(format!("texture {id:?} has no path")))?;
        let img = image::open(path)
            .map_err(|e| Error::Asset(format!("{}: {e}", path.display())))?
            .to_rgb8();
        let region = entry
            .sample_region
            .unwrap_or_else(|| Rect::full(img.width(), img.height()));
        Texture::new(id, entry.kind, entry.gender, entry.collection.clone(), img, region)
            .map_err(|e| Error::Asset(e.to_string()))
    }
}
