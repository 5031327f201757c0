#![allow(dead_code)]

use humanflow::body_model::{BodyModel, Gender, PoseFrame, ShapeVector};
use humanflow::math::Vec3;
use humanflow::motion::{generate_hand_library, generate_motion_library, MotionLimits, Subsequence};
use humanflow::scene::{
    compose_subsequence, ActorSpec, AssetPools, AssetRefs, Background, Camera, ComposeContext, Degrade,
    Intrinsics, Mode, ModeParams, ModelRef, Placement, SceneSpec, ShLighting, SCENE_SCHEMA_VERSION, SH_COEFFS,
};
use humanflow::texture_lab::{Split, TextureLibrary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn intrinsics(size: u32, focal: f64) -> Intrinsics {
    Intrinsics {
        focal,
        cx: size as f64 / 2.0,
        cy: size as f64 / 2.0,
        width: size,
        height: size,
    }
}

pub fn ambient(k: f64) -> ShLighting {
    let mut c = [0.0; SH_COEFFS];
    c[0] = k;
    ShLighting::uniform(c)
}

/// Background-only scene with a camera at height 1 m looking along +z.
pub fn empty_scene(size: u32, focal: f64, n_frames: usize, billboard: f64) -> SceneSpec {
    SceneSpec {
        schema_version: SCENE_SCHEMA_VERSION,
        mode: Mode::Mhof,
        split: Split::Train,
        index: 0,
        seed: 0,
        model: ModelRef::Desk { fingers: false, coarse: false },
        assets: AssetRefs::default(),
        n_frames,
        requested_actors: 0,
        camera: Camera::looking_forward(intrinsics(size, focal), Vec3::new(0.0, 1.0, 0.0)),
        camera_noise: None,
        lighting: ambient(1.5),
        background: Background {
            texture_id: "proc:bg:0".into(),
            depth: billboard,
        },
        degrade: Degrade {
            motion_blur: false,
            gaussian_blur_sigma: None,
        },
        actors: vec![],
    }
}

/// An actor holding the rest pose, its root moved by `root_shift(frame)`.
pub fn rest_actor(
    model: &BodyModel<f64>,
    n_frames: usize,
    placement: Placement,
    root_shift: impl Fn(usize) -> Vec3<f64>,
) -> ActorSpec {
    let frames = (0..n_frames)
        .map(|f| {
            let mut p = PoseFrame::rest(model.num_joints());
            p.root_translation = root_shift(f);
            p
        })
        .collect();
    ActorSpec {
        shape: ShapeVector::zeros(model.num_shape_coeffs(), Gender::Female),
        texture_id: "proc:body:scan:female:0".into(),
        hand_texture_id: None,
        motion: Subsequence {
            source_id: "rest".into(),
            frame_range: [0, n_frames],
            frames,
        },
        hand_motion_id: None,
        placement,
    }
}

/// Procedural asset pools for `params` and the model they imply.
pub fn procedural_pools(params: &ModeParams, model: &BodyModel<f64>, seed: u64) -> [AssetPools; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fps, frames) = match params.mode {
        Mode::Shof => (50.0, 16 * (params.subsequence_length + 4)),
        Mode::Mhof => (60.0, 5 * (params.subsequence_length * 3)),
    };
    let lim = MotionLimits::default();
    let motions = generate_motion_library(&mut rng, model, 12, frames, fps, &lim).unwrap();
    let hands = if params.fingers {
        generate_hand_library(&mut rng, model, 6, frames, fps, &lim).unwrap()
    } else {
        Vec::new()
    };
    let lib = TextureLibrary::procedural(3, 6, 6);
    AssetPools::build_splits(&mut rng, &lib, model, &motions, &hands, params).unwrap().0
}

/// A composed desk scene at `size` pixels.
pub fn desk_scene(mode: Mode, size: u32, seed: u64) -> (SceneSpec, BodyModel<f64>) {
    let mut params = ModeParams::for_mode(mode);
    params.image_width = size;
    params.image_height = size;
    params.focal = size as f64 * 1.25;
    let model_ref = ModelRef::Desk {
        fingers: params.fingers,
        coarse: false,
    };
    let model = model_ref.load().unwrap();
    let pools = procedural_pools(&params, &model, seed);
    let ctx = ComposeContext {
        params: &params,
        pools: &pools[0],
        model: &model,
        model_ref: &model_ref,
        assets: &AssetRefs::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = compose_subsequence(&mut rng, &ctx, Split::Train, 0, seed).unwrap();
    (spec, model)
}
