//! Asset references stored in scene specs and the per-split sampling pools.

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ModeParams, Subsample};
use crate::body_model::{BodyModel, DeskModelOptions, Gender};
use crate::error::{invalid, Error, Result};
use crate::motion::{subsample_by_stride, subsample_sequence, MotionSequence, SequenceSampler};
use crate::texture_lab::{mean_hsv, split_assets, Split, SplitMap, TextureKind, TextureLibrary, TextureManifest};

/// Which body model a scene uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelRef {
    /// The built-in procedural humanoid.
    Desk {
        fingers: bool,
        #[serde(default)]
        coarse: bool,
    },
    File { path: PathBuf },
}

impl ModelRef {
    pub fn load(&self) -> Result<BodyModel<f64>> {
        match self {
            ModelRef::Desk { fingers, coarse } => {
                let opts = if *coarse {
                    DeskModelOptions::coarse(*fingers)
                } else {
                    DeskModelOptions::standard(*fingers)
                };
                Ok(BodyModel::desk(&opts))
            }
            ModelRef::File { path } => BodyModel::load(path).map_err(|e| Error::Asset(e.to_string())),
        }
    }
}

/// User texture sources; procedural ids need none.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetRefs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture_manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_dir: Option<PathBuf>,
}

impl AssetRefs {
    /// `base` with every texture kind present in the user sources replaced by
    /// the user entries.
    pub fn library(&self, mut base: TextureLibrary) -> Result<TextureLibrary> {
        if let Some(p) = &self.texture_manifest {
            let user = TextureLibrary::from_manifest(TextureManifest::load(p)?);
            for kind in [TextureKind::Body, TextureKind::Hand, TextureKind::Background] {
                let entries: Vec<_> = user.of_kind(kind).cloned().collect();
                if !entries.is_empty() {
                    base.replace_kind(kind, entries);
                }
            }
        }
        if let Some(dir) = &self.background_dir {
            base.replace_kind(TextureKind::Background, TextureLibrary::background_dir(dir)?);
        }
        Ok(base)
    }
}

/// Which split every asset id went to.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetSplits {
    pub bodies: SplitMap,
    pub hands: SplitMap,
    pub backgrounds: SplitMap,
    pub motions: SplitMap,
    pub hand_motions: SplitMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyTextureInfo {
    pub id: String,
    pub gender: Gender,
    pub collection: String,
    pub mean_hsv: [f64; 3],
}

/// Everything one split may draw from.
#[derive(Clone, Debug)]
pub struct AssetPools {
    pub split: Split,
    pub bodies: Vec<BodyTextureInfo>,
    /// Hand texture ids with their mean HSV.
    pub hands: Vec<(String, [f64; 3])>,
    pub backgrounds: Vec<String>,
    /// Subsampled body motions, each at least one subsequence long.
    pub motions: Vec<MotionSequence<f64>>,
    pub hand_motions: Vec<MotionSequence<f64>>,
    sampler: Option<SequenceSampler>,
}

impl AssetPools {
    pub fn new(
        split: Split,
        bodies: Vec<BodyTextureInfo>,
        hands: Vec<(String, [f64; 3])>,
        backgrounds: Vec<String>,
        motions: Vec<MotionSequence<f64>>,
        hand_motions: Vec<MotionSequence<f64>>,
    ) -> Result<Self> {
        let sampler = if motions.is_empty() {
            None
        } else {
            let lengths: Vec<usize> = motions.iter().map(MotionSequence::len).collect();
            Some(SequenceSampler::new(&lengths)?)
        };
        Ok(Self {
            split,
            bodies,
            hands,
            backgrounds,
            motions,
            hand_motions,
            sampler,
        })
    }

    pub fn sequence_sampler(&self) -> Result<&SequenceSampler> {
        self.sampler
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("no motions in the {} split", self.split)))
    }

    /// Errors naming the first empty pool required by `params`.
    pub fn check(&self, params: &ModeParams) -> Result<()> {
        let empty = |what: &str| invalid(format!("no {what} in the {} split", self.split));
        if self.bodies.is_empty() {
            return empty("body textures");
        }
        if self.backgrounds.is_empty() {
            return empty("backgrounds");
        }
        if self.motions.is_empty() {
            return empty("motions");
        }
        if params.hand_textures && self.hands.is_empty() {
            return empty("hand textures");
        }
        if params.fingers && self.hand_motions.is_empty() {
            return empty("hand motions");
        }
        Ok(())
    }

    /// Splits every asset kind with the mode ratios and builds one pool per
    /// split. Motions are subsampled per the mode; sequences shorter than a
    /// subsequence are dropped.
    pub fn build_splits<R: Rng + ?Sized>(
        rng: &mut R,
        library: &TextureLibrary,
        model: &BodyModel<f64>,
        motions: &[MotionSequence<f64>],
        hand_motions: &[MotionSequence<f64>],
        params: &ModeParams,
    ) -> Result<([AssetPools; 3], AssetSplits)> {
        let ratios = params.texture_ratios;
        let ids = |kind| library.of_kind(kind).map(|e| e.id.clone()).collect::<Vec<_>>();
        let body_split = split_assets(rng, &ids(TextureKind::Body), ratios)?;
        let bg_split = split_assets(rng, &ids(TextureKind::Background), ratios)?;
        let hand_split = if params.hand_textures {
            split_assets(rng, &ids(TextureKind::Hand), ratios)?
        } else {
            Default::default()
        };
        let thin = |s: &MotionSequence<f64>| match params.subsample {
            Subsample::Stride(k) => subsample_by_stride(s, k),
            Subsample::TargetFps(f) if f < s.fps => subsample_sequence(s, f),
            Subsample::TargetFps(_) => Ok(s.clone()),
        };
        let mut body_motions = Vec::new();
        for m in motions {
            let t = thin(m)?;
            if t.len() >= params.subsequence_length {
                body_motions.push(t);
            } else {
                log::warn!("motion {:?} shorter than one subsequence after subsampling", m.id);
            }
        }
        let motion_ids: Vec<String> = body_motions.iter().map(|m| m.id.clone()).collect();
        let motion_split = split_assets(rng, &motion_ids, ratios)?;
        let (hand_list, hand_motion_split) = if params.fingers {
            let list = hand_motions.iter().map(thin).collect::<Result<Vec<_>>>()?;
            let ids: Vec<String> = list.iter().map(|m| m.id.clone()).collect();
            let split = split_assets(rng, &ids, ratios)?;
            (list, split)
        } else {
            (Vec::new(), Default::default())
        };

        let pools = Split::ALL.map(|split| -> Result<AssetPools> {
            let bodies = body_split
                .get(split)
                .iter()
                .map(|id| {
                    let tex = library.load(id, model)?;
                    Ok(BodyTextureInfo {
                        id: id.clone(),
                        gender: tex.gender.unwrap_or(Gender::Female),
                        collection: tex.collection.clone(),
                        mean_hsv: mean_hsv(&tex)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let hands = hand_split
                .get(split)
                .iter()
                .map(|id| Ok((id.clone(), mean_hsv(&library.load(id, model)?)?)))
                .collect::<Result<Vec<_>>>()?;
            let pick = |list: &[MotionSequence<f64>], ids: &[String]| {
                list.iter().filter(|m| ids.contains(&m.id)).cloned().collect::<Vec<_>>()
            };
            AssetPools::new(
                split,
                bodies,
                hands,
                bg_split.get(split).to_vec(),
                pick(&body_motions, motion_split.get(split)),
                pick(&hand_list, hand_motion_split.get(split)),
            )
        });
        let [a, b, c] = pools;
        let splits = AssetSplits {
            bodies: body_split,
            hands: hand_split,
            backgrounds: bg_split,
            motions: motion_split,
            hand_motions: hand_motion_split,
        };
        Ok(([a?, b?, c?], splits))
    }
}
