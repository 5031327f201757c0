//! Procedural stand-ins for motion capture.
//!
//! Joint trajectories are parametric gaits or sums of low-frequency
//! sinusoids around a relaxed arms-down pose. A final pass limits every
//! per-frame joint step to `max_angular_velocity / fps`, measured as the
//! Euclidean distance between consecutive axis-angle vectors.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MotionSequence;
use crate::body_model::{BodyModel, PoseFrame};
use crate::error::{invalid, Result};
use crate::math::Vec3;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionKind {
    Walk,
    Reach,
    Idle,
    RandomSmooth,
}

impl MotionKind {
    pub const ALL: [MotionKind; 4] = [
        MotionKind::Walk,
        MotionKind::Reach,
        MotionKind::Idle,
        MotionKind::RandomSmooth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MotionKind::Walk => "walk",
            MotionKind::Reach => "reach",
            MotionKind::Idle => "idle",
            MotionKind::RandomSmooth => "random-smooth",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    /// Cap on per-joint angular speed (rad/s).
    pub max_angular_velocity: f64,
    /// Cap on root translation speed (m/s).
    pub max_root_speed: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            max_angular_velocity: 4.0,
            max_root_speed: 2.0,
        }
    }
}

/// Largest per-frame axis-angle step over all joints of a sequence.
pub fn max_joint_step<T: Real>(seq: &MotionSequence<T>) -> f64 {
    seq.frames
        .windows(2)
        .flat_map(|w| {
            w[0].joint_rotations
                .iter()
                .zip(&w[1].joint_rotations)
                .map(|(a, b)| (*b - *a).norm().as_f64())
        })
        .fold(0.0, f64::max)
}

/// Joints the generators drive, looked up by the desk skeleton names.
struct Rig {
    root: usize,
    hips: [Option<usize>; 2],
    knees: [Option<usize>; 2],
    ankles: [Option<usize>; 2],
    shoulders: [Option<usize>; 2],
    elbows: [Option<usize>; 2],
    spine: [Option<usize>; 3],
    neck: Option<usize>,
    head: Option<usize>,
    /// Non-root, non-finger joints.
    body: Vec<usize>,
}

impl Rig {
    fn new<T: Real>(model: &BodyModel<T>) -> Self {
        let j = |n: &str| model.joint_index(n);
        let pair = |n: &str| [j(&format!("L_{n}")), j(&format!("R_{n}"))];
        let root = model.root();
        let body = (0..model.num_joints())
            .filter(|i| *i != root && !model.finger_joints.contains(i))
            .collect();
        Self {
            root,
            hips: pair("hip"),
            knees: pair("knee"),
            ankles: pair("ankle"),
            shoulders: pair("shoulder"),
            elbows: pair("elbow"),
            spine: [j("spine1"), j("spine2"), j("spine3")],
            neck: j("neck"),
            head: j("head"),
            body,
        }
    }
}

/// Left side is +1, right side is -1 (the left arm points along +x at rest).
const SIDES: [f64; 2] = [1.0, -1.0];

/// Arms lowered from the T-pose, elbows slightly bent forward.
fn relaxed_pose(rig: &Rig, n_joints: usize, arm_drop: f64, elbow: f64) -> Vec<[f64; 3]> {
    let mut r = vec![[0.0; 3]; n_joints];
    for (s, side) in SIDES.iter().enumerate() {
        if let Some(sh) = rig.shoulders[s] {
            r[sh] = [0.0, 0.0, -side * arm_drop];
        }
        if let Some(el) = rig.elbows[s] {
            r[el] = [0.0, -side * elbow, 0.0];
        }
    }
    r
}

fn add(r: &mut [[f64; 3]], j: Option<usize>, d: [f64; 3]) {
    if let Some(j) = j {
        for k in 0..3 {
            r[j][k] += d[k];
        }
    }
}

/// Sum of a few random sinusoids; amplitudes sum to at most `amp`.
struct SmoothNoise {
    terms: Vec<(f64, f64, f64)>,
}

impl SmoothNoise {
    fn new<R: Rng + ?Sized>(rng: &mut R, amp: f64, max_hz: f64) -> Self {
        let n = 3;
        let terms = (0..n)
            .map(|_| {
                let a = rng.random_range(0.0..=1.0) * amp / n as f64;
                let f = rng.random_range(0.1..=max_hz.max(0.1));
                let p = rng.random_range(0.0..TAU);
                (a, f, p)
            })
            .collect();
        Self { terms }
    }

    fn at(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(a, f, p)| a * (TAU * f * t + p).sin()).sum()
    }
}

/// Generates a body motion; finger joints stay at rest.
///
/// `kind = Idle` yields one constant pose with a fixed root.
pub fn generate_procedural_motion<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    model: &BodyModel<T>,
    kind: MotionKind,
    n_frames: usize,
    fps: f64,
    limits: &MotionLimits,
) -> Result<MotionSequence<T>> {
    check_args(n_frames, fps, limits)?;
    let rig = Rig::new(model);
    let nj = model.num_joints();
    let dt = 1.0 / fps;
    let arm_drop = rng.random_range(0.95..1.25);
    let elbow = rng.random_range(0.1..0.4);
    let base = relaxed_pose(&rig, nj, arm_drop, elbow);
    let mut rots: Vec<Vec<[f64; 3]>> = Vec::with_capacity(n_frames);
    let mut roots: Vec<[f64; 3]> = Vec::with_capacity(n_frames);

    match kind {
        MotionKind::Idle => {
            let mut pose = base;
            for &j in &rig.body {
                for c in pose[j].iter_mut() {
                    *c += rng.random_range(-0.05..0.05);
                }
            }
            rots.resize(n_frames, pose);
            roots.resize(n_frames, [0.0; 3]);
        }
        MotionKind::Walk => {
            let cadence = rng.random_range(0.7..1.0);
            let speed = rng.random_range(0.6..1.3f64).min(limits.max_root_speed);
            let hip_amp = rng.random_range(0.25..0.45);
            let knee_amp = rng.random_range(0.3..0.7);
            let arm_amp = rng.random_range(0.1..0.35);
            let phase0 = rng.random_range(0.0..TAU);
            for k in 0..n_frames {
                let t = k as f64 * dt;
                let ph = TAU * cadence * t + phase0;
                let mut r = base.clone();
                for (s, side) in SIDES.iter().enumerate() {
                    let swing = side * ph.sin();
                    add(&mut r, rig.hips[s], [hip_amp * swing, 0.0, 0.0]);
                    let knee = 0.5 + 0.5 * (ph + side * 0.5 * TAU - 0.6).sin();
                    add(&mut r, rig.knees[s], [knee_amp * knee, 0.0, 0.0]);
                    add(&mut r, rig.ankles[s], [-0.2 * hip_amp * swing, 0.0, 0.0]);
                    add(&mut r, rig.shoulders[s], [-arm_amp * swing, 0.0, 0.0]);
                }
                add(&mut r, rig.spine[0], [0.0, 0.06 * ph.sin(), 0.0]);
                add(&mut r, Some(rig.root), [0.0, -0.05 * ph.sin(), 0.0]);
                rots.push(r);
                roots.push([0.0, 0.015 * (2.0 * ph).cos(), speed * t]);
            }
        }
        MotionKind::Reach => {
            let period = rng.random_range(1.5..3.0);
            let sides = match rng.random_range(0..3) {
                0 => vec![0],
                1 => vec![1],
                _ => vec![0, 1],
            };
            let raise = rng.random_range(0.8..1.4);
            let lift = rng.random_range(0.0..0.5);
            let lean = rng.random_range(0.0..0.25);
            let phase0 = rng.random_range(0.0..TAU);
            let sway = SmoothNoise::new(rng, 0.1, 0.4);
            for k in 0..n_frames {
                let t = k as f64 * dt;
                let u = 0.5 - 0.5 * (TAU * t / period + phase0).cos();
                let mut r = base.clone();
                for &s in &sides {
                    let side = SIDES[s];
                    add(&mut r, rig.shoulders[s], [0.0, -side * raise * u, side * (arm_drop - lift) * u]);
                    add(&mut r, rig.elbows[s], [0.0, side * elbow * u, 0.0]);
                }
                add(&mut r, rig.spine[1], [lean * u, 0.0, 0.0]);
                add(&mut r, rig.head, [0.0, sway.at(t), 0.0]);
                rots.push(r);
                roots.push([0.0; 3]);
            }
        }
        MotionKind::RandomSmooth => {
            let noise: Vec<[SmoothNoise; 3]> = rig
                .body
                .iter()
                .map(|&j| {
                    let amp = if rig.spine.contains(&Some(j)) || Some(j) == rig.neck {
                        0.15
                    } else {
                        0.5
                    };
                    [(); 3].map(|_| SmoothNoise::new(rng, amp, 0.8))
                })
                .collect();
            let root_rot = [(); 3].map(|_| SmoothNoise::new(rng, 0.2, 0.3));
            let drift = [SmoothNoise::new(rng, 0.4, 0.3), SmoothNoise::new(rng, 0.4, 0.3)];
            for k in 0..n_frames {
                let t = k as f64 * dt;
                let mut r = base.clone();
                for (i, &j) in rig.body.iter().enumerate() {
                    add(&mut r, Some(j), noise[i].each_ref().map(|n| n.at(t)));
                }
                r[rig.root] = [0.0, root_rot[1].at(t), 0.0];
                r[rig.root][0] = 0.2 * root_rot[0].at(t);
                r[rig.root][2] = 0.2 * root_rot[2].at(t);
                rots.push(r);
                roots.push([drift[0].at(t), 0.0, drift[1].at(t)]);
            }
        }
    }

    let frames = finish(rots, roots, fps, limits);
    Ok(MotionSequence {
        id: String::new(),
        category: kind.as_str().to_string(),
        fps,
        frames,
    })
}

/// Finger-only motion: smooth grasp/release curls, all other joints at rest.
pub fn generate_hand_motion<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    model: &BodyModel<T>,
    n_frames: usize,
    fps: f64,
    limits: &MotionLimits,
) -> Result<MotionSequence<T>> {
    check_args(n_frames, fps, limits)?;
    if !model.has_fingers() {
        return invalid("hand motion needs a model with finger joints");
    }
    let nj = model.num_joints();
    let max_curl = rng.random_range(0.6..1.2);
    // one grip signal per (side, finger)
    let mut grips: Vec<(String, SmoothNoise)> = Vec::new();
    let mut signal_of = Vec::with_capacity(model.finger_joints.len());
    for &j in &model.finger_joints {
        let name = &model.joint_names[j];
        let key = name.trim_end_matches(|c: char| c.is_ascii_digit()).to_string();
        let idx = match grips.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                grips.push((key, SmoothNoise::new(rng, 1.0, 0.6)));
                grips.len() - 1
            }
        };
        let side = if name.starts_with("R_") { -1.0 } else { 1.0 };
        let seg: f64 = match name.chars().last().and_then(|c| c.to_digit(10)) {
            Some(1) => 0.8,
            Some(2) => 1.0,
            _ => 0.7,
        };
        let axis = if name.contains("thumb") { [0.0, -side, 0.0] } else { [0.0, 0.0, -side] };
        signal_of.push((j, idx, seg, axis));
    }
    let mut rots = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let t = k as f64 / fps;
        let mut r = vec![[0.0; 3]; nj];
        for &(j, idx, seg, axis) in &signal_of {
            let g = (0.5 + grips[idx].1.at(t)).clamp(0.0, 1.0);
            r[j] = axis.map(|a| a * g * seg * max_curl);
        }
        rots.push(r);
    }
    let frames = finish(rots, vec![[0.0; 3]; n_frames], fps, limits);
    Ok(MotionSequence {
        id: String::new(),
        category: "hand".to_string(),
        fps,
        frames,
    })
}

fn check_args(n_frames: usize, fps: f64, limits: &MotionLimits) -> Result<()> {
    if n_frames < 2 {
        return invalid(format!("need at least 2 frames, got {n_frames}"));
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return invalid(format!("fps must be positive, got {fps}"));
    }
    if !(limits.max_angular_velocity > 0.0 && limits.max_root_speed > 0.0) {
        return invalid("motion limits must be positive");
    }
    Ok(())
}

fn clamp_step(prev: [f64; 3], next: [f64; 3], cap: f64) -> [f64; 3] {
    let d = [next[0] - prev[0], next[1] - prev[1], next[2] - prev[2]];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if n <= cap {
        return next;
    }
    // a hair under the cap so the check survives rounding
    let s = cap * (1.0 - 1e-9) / n;
    [prev[0] + d[0] * s, prev[1] + d[1] * s, prev[2] + d[2] * s]
}

fn finish<T: Real>(
    mut rots: Vec<Vec<[f64; 3]>>,
    mut roots: Vec<[f64; 3]>,
    fps: f64,
    limits: &MotionLimits,
) -> Vec<PoseFrame<T>> {
    let ang = limits.max_angular_velocity / fps;
    let lin = limits.max_root_speed / fps;
    for k in 1..rots.len() {
        let (done, rest) = rots.split_at_mut(k);
        for (p, n) in done[k - 1].iter().zip(rest[0].iter_mut()) {
            *n = clamp_step(*p, *n, ang);
        }
        roots[k] = clamp_step(roots[k - 1], roots[k], lin);
    }
    let v = |a: [f64; 3]| Vec3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]));
    rots.into_iter()
        .zip(roots)
        .map(|(r, t)| PoseFrame {
            root_translation: v(t),
            joint_rotations: r.into_iter().map(v).collect(),
        })
        .collect()
}

/// `count` body sequences cycling through every [`MotionKind`], with ids
/// `{kind}-{i:03}`.
pub fn generate_motion_library<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    model: &BodyModel<T>,
    count: usize,
    n_frames: usize,
    fps: f64,
    limits: &MotionLimits,
) -> Result<Vec<MotionSequence<T>>> {
    (0..count)
        .map(|i| {
            let kind = MotionKind::ALL[i % MotionKind::ALL.len()];
            let mut seq = generate_procedural_motion(rng, model, kind, n_frames, fps, limits)?;
            seq.id = format!("{}-{i:03}", kind.as_str());
            Ok(seq)
        })
        .collect()
}

/// `count` hand sequences with ids `hand-{i:03}`.
pub fn generate_hand_library<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    model: &BodyModel<T>,
    count: usize,
    n_frames: usize,
    fps: f64,
    limits: &MotionLimits,
) -> Result<Vec<MotionSequence<T>>> {
    (0..count)
        .map(|i| {
            let mut seq = generate_hand_motion(rng, model, n_frames, fps, limits)?;
            seq.id = format!("hand-{i:03}");
            Ok(seq)
        })
        .collect()
}
