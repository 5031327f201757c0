use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use image::{ImageFormat, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    sha256_hex, stream_seed, subsequence_seed, FileRecord, GenConfig, Manifest, ManifestEntry, SkippedEntry,
    MANIFEST_FORMAT, MANIFEST_VERSION,
};
use crate::body_model::BodyModel;
use crate::error::{io_err, Error, Result};
use crate::flow::encode_flo;
use crate::motion::{generate_hand_library, generate_motion_library, MotionLimits, MotionSequence};
use crate::render::{render_scene, SceneTextures};
use crate::scene::{compose_subsequence, AssetPools, AssetRefs, ComposeContext, ModeParams, ModelRef, SceneSpec, Subsample};
use crate::texture_lab::{Split, TextureKind, TextureLibrary};

/// One encoded output file of a subsequence.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Renders a scene and encodes `scene.json`, `rgb_XXXX.png`,
/// `flow_XXXX.flo` (frame t to t + 1) and `seg_XXXX.png`.
pub fn render_files(spec: &SceneSpec, model: &BodyModel<f64>) -> Result<Vec<RenderedFile>> {
    let textures = SceneTextures::load(spec, model)?;
    let (_, r) = render_scene(spec, model, &textures)?;
    let mut files = vec![RenderedFile {
        name: "scene.json".into(),
        bytes: spec.to_json()?.into_bytes(),
    }];
    for (f, img) in r.rgb.iter().enumerate() {
        files.push(RenderedFile {
            name: format!("rgb_{f:04}.png"),
            bytes: png(&img.to_rgb8())?,
        });
    }
    for (f, flow) in r.flow.iter().enumerate() {
        files.push(RenderedFile {
            name: format!("flow_{f:04}.flo"),
            bytes: encode_flo(flow)?,
        });
    }
    for (f, seg) in r.seg.iter().enumerate() {
        files.push(RenderedFile {
            name: format!("seg_{f:04}.png"),
            bytes: png(&seg.to_png_image()?)?,
        });
    }
    Ok(files)
}

fn write_files(dir: &Path, prefix: &str, files: &[RenderedFile]) -> Result<Vec<FileRecord>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.bytes).map_err(io_err(&path))?;
            Ok(FileRecord {
                path: format!("{prefix}{}", f.name),
                sha256: sha256_hex(&f.bytes),
            })
        })
        .collect()
}

/// Re-renders a saved scene into `out`; records are relative to `out`.
pub fn replay(spec_path: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<Vec<FileRecord>> {
    let spec = SceneSpec::load(spec_path)?;
    let model = spec.model.load()?;
    let files = render_files(&spec, &model)?;
    write_files(out.as_ref(), "", &files)
}

fn to_asset(e: Error) -> Error {
    match e {
        Error::Asset(_) | Error::Io { .. } | Error::InvalidArgument(_) | Error::SchemaVersion { .. } => e,
        other => Error::Asset(other.to_string()),
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(io_err(p))
}

fn load_motion_dir(dir: &Path, model: &BodyModel<f64>) -> Result<Vec<MotionSequence<f64>>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Asset(format!("no motion files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| MotionSequence::load(p, model).map_err(|e| Error::Asset(format!("{}: {e}", p.display()))))
        .collect()
}

/// Source length and rate that leave a few subsequences after subsampling.
fn procedural_timing(params: &ModeParams) -> (f64, usize) {
    let len = params.subsequence_length;
    match params.subsample {
        Subsample::Stride(k) => (50.0, k * len * 3),
        Subsample::TargetFps(t) => {
            let fps = t.max(60.0);
            let stride = (fps / t).round().max(1.0) as usize;
            (fps, stride * len * 4)
        }
    }
}

struct Prepared {
    params: ModeParams,
    model_ref: ModelRef,
    model: BodyModel<f64>,
    assets: AssetRefs,
    pools: [AssetPools; 3],
    splits: crate::scene::AssetSplits,
}

fn prepare(cfg: &GenConfig) -> Result<Prepared> {
    let params = cfg.params()?;
    let a = &cfg.assets;
    let model_ref = match &a.model {
        Some(p) => ModelRef::File { path: absolute(p)? },
        None => ModelRef::Desk {
            fingers: params.fingers,
            coarse: a.coarse_model,
        },
    };
    let model = model_ref.load()?;
    if params.fingers && !model.has_fingers() {
        return Err(Error::Asset(format!("{} mode needs a model with finger joints", params.mode.as_str())));
    }
    let assets = AssetRefs {
        texture_manifest: a.textures.as_deref().map(absolute).transpose()?,
        background_dir: a.backgrounds.as_deref().map(absolute).transpose()?,
    };
    let pc = a.procedural;
    let hands = if params.hand_textures { pc.hand_textures } else { 0 };
    let library = assets.library(TextureLibrary::procedural(pc.body_textures, hands, pc.backgrounds))?;
    for e in library.of_kind(TextureKind::Background) {
        if let Some(p) = &e.path {
            if !p.is_file() {
                return Err(Error::Asset(format!("background {} not found at {}", e.id, p.display())));
            }
        }
    }

    let (fps, frames) = procedural_timing(&params);
    let limits = MotionLimits::default();
    let motions = match &a.motions {
        Some(dir) => load_motion_dir(dir, &model)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, "motions"));
            generate_motion_library(&mut rng, &model, pc.motions, frames, fps, &limits)?
        }
    };
    let hand_motions = match (&a.hand_motions, params.fingers) {
        (_, false) => Vec::new(),
        (Some(dir), true) => load_motion_dir(dir, &model)?,
        (None, true) => {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, "hand-motions"));
            generate_hand_library(&mut rng, &model, pc.hand_motions, frames, fps, &limits)?
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, "asset-splits"));
    let (pools, splits) = AssetPools::build_splits(&mut rng, &library, &model, &motions, &hand_motions, &params)?;
    for split in Split::ALL {
        if cfg.counts.get(split) > 0 {
            pools[split.index()].check(&params)?;
        }
    }
    Ok(Prepared {
        params,
        model_ref,
        model,
        assets,
        pools,
        splits,
    })
}

fn prepare_output(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let probe = out.join(".write-probe");
    std::fs::write(&probe, b"").map_err(io_err(&probe))?;
    std::fs::remove_file(&probe).map_err(io_err(&probe))
}

/// Generates the dataset described by `cfg` into `out` and writes
/// `out/manifest.json`.
///
/// Config, asset and output problems are reported before anything is
/// generated. Scenes that cannot be placed are logged and skipped; their
/// index and seed stay reserved. Any later failure is a generation error.
pub fn generate(cfg: &GenConfig, out: impl AsRef<Path>) -> Result<Manifest> {
    let out = out.as_ref();
    let prep = prepare(cfg).map_err(to_asset)?;
    prepare_output(out)?;

    let mut specs = Vec::new();
    let mut skipped = Vec::new();
    for split in Split::ALL {
        let ctx = ComposeContext {
            params: &prep.params,
            pools: &prep.pools[split.index()],
            model: &prep.model,
            model_ref: &prep.model_ref,
            assets: &prep.assets,
        };
        for index in 0..cfg.counts.get(split) {
            let seed = subsequence_seed(cfg.seed, split, index);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match compose_subsequence(&mut rng, &ctx, split, index, seed) {
                Ok(spec) => specs.push(spec),
                Err(Error::Generation(reason)) => {
                    log::warn!("skipping {split}/{index:05} (seed {seed}): {reason}");
                    skipped.push(SkippedEntry {
                        split,
                        index,
                        seed,
                        reason,
                    });
                }
                Err(e) => return Err(Error::Generation(format!("{split}/{index:05}: {e}"))),
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let model = &prep.model;
    let entries = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let rel = format!("{}/{:05}/", spec.split, spec.index);
                let files = render_files(spec, model)?;
                let records = write_files(&out.join(&rel), &rel, &files)?;
                log::info!("rendered {rel}");
                Ok(entry(spec, records))
            })
            .collect::<Result<Vec<_>>>()
    });
    let entries = entries.map_err(|e| match e {
        Error::Generation(_) => e,
        other => Error::Generation(other.to_string()),
    })?;

    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        format_version: MANIFEST_VERSION,
        engine_version: super::ENGINE_VERSION.into(),
        created: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        root_seed: cfg.seed,
        counts: cfg.counts,
        params: prep.params,
        asset_splits: prep.splits,
        entries,
        skipped,
    };
    manifest.save(out.join("manifest.json"))?;
    Ok(manifest)
}

fn entry(spec: &SceneSpec, records: Vec<FileRecord>) -> ManifestEntry {
    let mut e = ManifestEntry {
        split: spec.split,
        index: spec.index,
        seed: spec.seed,
        scene: records[0].clone(),
        rgb: Vec::new(),
        flow: Vec::new(),
        seg: Vec::new(),
    };
    for r in records.into_iter().skip(1) {
        let name = r.path.rsplit('/').next().unwrap_or_default();
        let list = if name.starts_with("rgb_") {
            &mut e.rgb
        } else if name.starts_with("flow_") {
            &mut e.flow
        } else {
            &mut e.seg
        };
        list.push(r);
    }
    e
}
