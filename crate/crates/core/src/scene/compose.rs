//! Per-subsequence parameter sampling and scene assembly.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::assets::{AssetPools, AssetRefs, ModelRef};
use super::camera::{Camera, CameraNoise};
use super::lighting::{sample_lighting, ShLighting};
use super::place::{
    actor_transform, ground_region, place_actors, pose_local, shof_camera, world_frames, Candidate,
    MAX_PLACEMENT_TRIES,
};
use super::spec::{ActorSpec, Background, Degrade, Placement, SceneSpec, SCENE_SCHEMA_VERSION};
use super::{sample_camera_noise, sample_gaussian_blur, sample_n_actors, Mode, ModeParams};
use crate::body_model::{sample_shape, BodyModel, Gender, GenderStats, ShapeVector};
use crate::collision::{validate_placement, Plane};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::motion::{splice_hand_poses_at, MotionSequence, Subsequence};
use crate::texture_lab::{hsv_distance, Split, BODY_COLLECTIONS};

/// Everything drawn for one actor before placement.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorDraw {
    pub shape: ShapeVector<f64>,
    pub texture_id: String,
    pub hand_texture_id: Option<String>,
    /// Index into the split's body motions.
    pub motion: usize,
    /// First frame of the subsequence window.
    pub window_start: usize,
    /// Hand motion index and start frame for finger splicing.
    pub hand_motion: Option<(usize, usize)>,
}

/// Every per-subsequence random parameter except the placement.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledParameters {
    pub actors: Vec<ActorDraw>,
    pub background_id: String,
    pub lighting: ShLighting,
    pub camera_noise: Option<CameraNoise>,
    pub gaussian_blur_sigma: Option<f64>,
    pub motion_blur: bool,
}

fn pick_body<'a, R: Rng + ?Sized>(
    rng: &mut R,
    pools: &'a AssetPools,
    gender: Gender,
    mode: Mode,
) -> &'a super::assets::BodyTextureInfo {
    let of_gender: Vec<_> = pools.bodies.iter().filter(|b| b.gender == gender).collect();
    let pool = if of_gender.is_empty() {
        pools.bodies.iter().collect()
    } else {
        of_gender
    };
    let pool = match mode {
        Mode::Shof => {
            let collection = BODY_COLLECTIONS[rng.random_range(0..BODY_COLLECTIONS.len())];
            let sub: Vec<_> = pool.iter().copied().filter(|b| b.collection == collection).collect();
            if sub.is_empty() {
                pool
            } else {
                sub
            }
        }
        Mode::Mhof => pool,
    };
    pool.choose(rng).copied().expect("body pool checked non-empty")
}

/// Draws actor count, per-actor shape, textures and motion windows, then the
/// background, lighting, camera noise and degradations.
pub fn sample_parameters<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ModeParams,
    pools: &AssetPools,
    model: &BodyModel<f64>,
) -> Result<SampledParameters> {
    pools.check(params)?;
    let sampler = pools.sequence_sampler()?;
    let stats = GenderStats::standard(model.num_shape_coeffs());
    let len = params.subsequence_length;
    let n = sample_n_actors(rng, params.actors);
    let mut actors = Vec::with_capacity(n);
    for _ in 0..n {
        let gender = if rng.random_bool(0.5) { Gender::Female } else { Gender::Male };
        let shape = sample_shape(rng, &stats, gender, params.shape_bound)?;
        let body = pick_body(rng, pools, gender, params.mode);
        let hand_texture_id = if params.hand_textures {
            pools
                .hands
                .iter()
                .min_by(|a, b| {
                    hsv_distance(body.mean_hsv, a.1).total_cmp(&hsv_distance(body.mean_hsv, b.1))
                })
                .map(|h| h.0.clone())
        } else {
            None
        };
        let motion = sampler.sample(rng);
        let windows = pools.motions[motion].len() / len;
        let window_start = rng.random_range(0..windows) * len;
        let hand_motion = if params.fingers {
            let h = rng.random_range(0..pools.hand_motions.len());
            Some((h, rng.random_range(0..pools.hand_motions[h].len())))
        } else {
            None
        };
        actors.push(ActorDraw {
            shape,
            texture_id: body.id.clone(),
            hand_texture_id,
            motion,
            window_start,
            hand_motion,
        });
    }
    let background_id = pools.backgrounds.choose(rng).expect("checked non-empty").clone();
    let lighting = sample_lighting(rng);
    let camera_noise = sample_camera_noise(rng, params, len);
    let gaussian_blur_sigma = sample_gaussian_blur(rng, params);
    Ok(SampledParameters {
        actors,
        background_id,
        lighting,
        camera_noise,
        gaussian_blur_sigma,
        motion_blur: params.motion_blur,
    })
}

/// Inputs shared by every subsequence of a generation run.
pub struct ComposeContext<'a> {
    pub params: &'a ModeParams,
    pub pools: &'a AssetPools,
    pub model: &'a BodyModel<f64>,
    pub model_ref: &'a ModelRef,
    pub assets: &'a AssetRefs,
}

fn actor_motion(ctx: &ComposeContext<'_>, draw: &ActorDraw) -> Result<Subsequence<f64>> {
    let len = ctx.params.subsequence_length;
    let seq = &ctx.pools.motions[draw.motion];
    let range = [draw.window_start, draw.window_start + len];
    let mut window = MotionSequence {
        id: seq.id.clone(),
        category: seq.category.clone(),
        fps: seq.fps,
        frames: seq.frames[range[0]..range[1]].to_vec(),
    };
    if let Some((h, start)) = draw.hand_motion {
        if ctx.model.has_fingers() {
            window = splice_hand_poses_at(ctx.model, &window, &ctx.pools.hand_motions[h], start)?;
        } else {
            log::warn!("finger motion requested for a model without finger joints");
        }
    }
    Ok(Subsequence {
        source_id: seq.id.clone(),
        frame_range: range,
        frames: window.frames,
    })
}

fn cameras(cam0: &Camera, noise: &Option<CameraNoise>, n: usize) -> Vec<Camera> {
    (0..n)
        .map(|f| match noise {
            Some(d) => {
                let (t, e) = d.accumulated(f);
                cam0.perturbed(t, e)
            }
            None => *cam0,
        })
        .collect()
}

fn billboard(cam0: &Camera, depth: f64) -> Plane<f64> {
    Plane {
        normal: Vec3::new(0.0, 0.0, 1.0),
        offset: cam0.center().z + depth,
    }
}

/// Samples and places one subsequence. Actors that cannot be placed are
/// dropped; a scene with no placed actor is a generation error.
pub fn compose_subsequence<R: Rng + ?Sized>(
    rng: &mut R,
    ctx: &ComposeContext<'_>,
    split: Split,
    index: usize,
    seed: u64,
) -> Result<SceneSpec> {
    let params = ctx.params;
    let model = ctx.model;
    let sp = sample_parameters(rng, params, ctx.pools, model)?;
    let n_frames = params.subsequence_length;
    let motions = sp
        .actors
        .iter()
        .map(|a| actor_motion(ctx, a))
        .collect::<Result<Vec<_>>>()?;
    let locals = sp
        .actors
        .iter()
        .zip(&motions)
        .map(|(a, m)| pose_local(model, &a.shape, m))
        .collect::<Result<Vec<_>>>()?;
    let intr = params.intrinsics();
    let root = model.root();

    let (cam0, placements) = match params.mode {
        Mode::Mhof => {
            let cam0 = Camera::looking_forward(intr, Vec3::new(0.0, params.camera_height, 0.0));
            let cams = cameras(&cam0, &sp.camera_noise, n_frames);
            let region = ground_region(&cam0, params.min_depth, params.actor_depth.1);
            let cands: Vec<Candidate> = locals.iter().map(|l| Candidate { local: l }).collect();
            let placements = place_actors(rng, model, &cands, &cams, &region, &billboard(&cam0, params.billboard_depth))?;
            (cam0, placements)
        }
        Mode::Shof => {
            let mut found = None;
            'tries: for _ in 0..MAX_PLACEMENT_TRIES {
                let depth = rng.random_range(params.actor_depth.0..=params.actor_depth.1);
                let placement = Placement {
                    x: 0.0,
                    z: 0.0,
                    yaw: rng.random_range(0.0..std::f64::consts::TAU),
                };
                let local = &locals[0];
                let t = actor_transform(local[0].joints[root], &placement);
                let cam0 = shof_camera(intr, t.apply(local[0].joints[root]), depth);
                let cams = cameras(&cam0, &sp.camera_noise, n_frames);
                for (m, cam) in local.iter().zip(&cams) {
                    if !cam.project(t.apply(m.joints[root])).is_some_and(|uv| cam.in_image(uv)) {
                        continue 'tries;
                    }
                }
                let frames = world_frames(local, root, &placement);
                let plane = billboard(&cam0, params.billboard_depth);
                let near = cam0.center().z + 0.5;
                if frames.iter().flatten().any(|&p| plane.is_beyond(p) || p.z <= near) {
                    continue;
                }
                found = Some((cam0, placement));
                break;
            }
            let (cam0, placement) = found.ok_or_else(|| {
                Error::Generation(format!("{split}/{index:05}: actor could not be placed in {MAX_PLACEMENT_TRIES} tries"))
            })?;
            (cam0, vec![Some(placement)])
        }
    };

    let mut actors = Vec::new();
    let mut frames = Vec::new();
    for (((draw, motion), local), placement) in sp.actors.iter().zip(motions).zip(&locals).zip(&placements) {
        let Some(placement) = placement else {
            log::debug!("{split}/{index:05}: dropped an actor after {MAX_PLACEMENT_TRIES} tries");
            continue;
        };
        frames.push(world_frames(local, root, placement));
        actors.push(ActorSpec {
            shape: draw.shape.clone(),
            texture_id: draw.texture_id.clone(),
            hand_texture_id: draw.hand_texture_id.clone(),
            motion,
            hand_motion_id: draw.hand_motion.filter(|_| ctx.model.has_fingers()).map(|(h, _)| ctx.pools.hand_motions[h].id.clone()),
            placement: *placement,
        });
    }
    if actors.is_empty() {
        return Err(Error::Generation(format!("{split}/{index:05}: no actor could be placed")));
    }
    let report = validate_placement(model, &frames, None, &billboard(&cam0, params.billboard_depth), false)?;
    if !report.is_valid() {
        return Err(Error::Internal(format!("{split}/{index:05}: placement failed validation: {report:?}")));
    }

    let spec = SceneSpec {
        schema_version: SCENE_SCHEMA_VERSION,
        mode: params.mode,
        split,
        index,
        seed,
        model: ctx.model_ref.clone(),
        assets: ctx.assets.clone(),
        n_frames,
        requested_actors: sp.actors.len(),
        camera: cam0,
        camera_noise: sp.camera_noise,
        lighting: sp.lighting,
        background: Background {
            texture_id: sp.background_id,
            depth: params.billboard_depth,
        },
        degrade: Degrade {
            motion_blur: sp.motion_blur,
            gaussian_blur_sigma: sp.gaussian_blur_sigma,
        },
        actors,
    };
    spec.validate()?;
    Ok(spec)
}
