//! Motion sequences: subsampling, subsequence splitting, length-weighted
//! sequence selection, hand-pose splicing and procedural generation.

mod io;
mod procedural;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body_model::{BodyModel, PoseFrame};
use crate::error::{invalid, Result};
use crate::scalar::Real;

pub use io::MOTION_SCHEMA_VERSION;
pub use procedural::{
    generate_hand_library, generate_hand_motion, generate_motion_library, generate_procedural_motion, max_joint_step,
    MotionKind, MotionLimits,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MotionSequence<T> {
    pub id: String,
    pub category: String,
    /// Frames per second.
    pub fps: f64,
    pub frames: Vec<PoseFrame<T>>,
}

/// Fixed-length window of a source sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Subsequence<T> {
    pub source_id: String,
    /// Half-open `[start, end)` range of source frames.
    pub frame_range: [usize; 2],
    pub frames: Vec<PoseFrame<T>>,
}

impl<T: Real> MotionSequence<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn num_joints(&self) -> usize {
        self.frames.first().map_or(0, |f| f.joint_rotations.len())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return invalid(format!("sequence {:?}: fps must be positive, got {}", self.id, self.fps));
        }
        if self.frames.is_empty() {
            return invalid(format!("sequence {:?} has no frames", self.id));
        }
        let n = self.num_joints();
        if let Some(k) = self.frames.iter().position(|f| f.joint_rotations.len() != n) {
            return invalid(format!(
                "sequence {:?}: frame {k} has {} joints, frame 0 has {n}",
                self.id,
                self.frames[k].joint_rotations.len()
            ));
        }
        if let Some(k) = self.frames.iter().position(|f| !f.is_finite()) {
            return invalid(format!("sequence {:?}: frame {k} is not finite", self.id));
        }
        Ok(())
    }
}

/// Keeps every `round(fps / target_fps)`-th frame starting at frame 0.
pub fn subsample_sequence<T: Real>(seq: &MotionSequence<T>, target_fps: f64) -> Result<MotionSequence<T>> {
    seq.validate()?;
    if !(target_fps > 0.0) || target_fps > seq.fps {
        return invalid(format!(
            "target fps {target_fps} must lie in (0, {}]",
            seq.fps
        ));
    }
    let stride = ((seq.fps / target_fps).round() as usize).max(1);
    let mut out = subsample_by_stride(seq, stride)?;
    out.fps = target_fps;
    Ok(out)
}

/// Keeps every `stride`-th frame starting at frame 0; fps is divided by `stride`.
pub fn subsample_by_stride<T: Real>(seq: &MotionSequence<T>, stride: usize) -> Result<MotionSequence<T>> {
    seq.validate()?;
    if stride == 0 {
        return invalid("subsampling stride must be at least 1");
    }
    Ok(MotionSequence {
        id: seq.id.clone(),
        category: seq.category.clone(),
        fps: seq.fps / stride as f64,
        frames: seq.frames.iter().step_by(stride).cloned().collect(),
    })
}

/// Consecutive non-overlapping windows of `length` frames; the tail is dropped.
pub fn split_subsequences<T: Real>(seq: &MotionSequence<T>, length: usize) -> Result<Vec<Subsequence<T>>> {
    if length < 2 {
        return invalid(format!("subsequence length must be at least 2, got {length}"));
    }
    Ok(seq
        .frames
        .chunks_exact(length)
        .enumerate()
        .map(|(i, chunk)| Subsequence {
            source_id: seq.id.clone(),
            frame_range: [i * length, (i + 1) * length],
            frames: chunk.to_vec(),
        })
        .collect())
}

/// Draws sequence indices with probability proportional to their lengths.
#[derive(Clone, Debug)]
pub struct SequenceSampler {
    dist: WeightedIndex<usize>,
}

impl SequenceSampler {
    pub fn new(lengths: &[usize]) -> Result<Self> {
        if lengths.is_empty() {
            return invalid("cannot sample from an empty sequence list");
        }
        if let Some(i) = lengths.iter().position(|&n| n == 0) {
            return invalid(format!("sequence {i} is empty"));
        }
        let dist = WeightedIndex::new(lengths).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        Ok(Self { dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

/// Index `j` with probability `|S_j| / Σ|S_i|`.
pub fn sample_sequence<T: Real, R: Rng + ?Sized>(rng: &mut R, sequences: &[MotionSequence<T>]) -> Result<usize> {
    let lengths: Vec<usize> = sequences.iter().map(MotionSequence::len).collect();
    Ok(SequenceSampler::new(&lengths)?.sample(rng))
}

/// Replaces the finger-joint rotations of every body frame with a continuous,
/// wrapping window of `hand_seq` starting at a random frame.
pub fn splice_hand_poses<T: Real, R: Rng + ?Sized>(
    model: &BodyModel<T>,
    body_seq: &MotionSequence<T>,
    hand_seq: &MotionSequence<T>,
    rng: &mut R,
) -> Result<MotionSequence<T>> {
    hand_seq.validate()?;
    let start = rng.random_range(0..hand_seq.len());
    splice_hand_poses_at(model, body_seq, hand_seq, start)
}

/// [`splice_hand_poses`] with an explicit window start.
pub fn splice_hand_poses_at<T: Real>(
    model: &BodyModel<T>,
    body_seq: &MotionSequence<T>,
    hand_seq: &MotionSequence<T>,
    start: usize,
) -> Result<MotionSequence<T>> {
    if !model.has_fingers() {
        return invalid("hand splicing needs a model with finger joints");
    }
    body_seq.validate()?;
    hand_seq.validate()?;
    if (body_seq.fps - hand_seq.fps).abs() > 1e-9 * body_seq.fps {
        return invalid(format!(
            "fps mismatch: body {} vs hand {}",
            body_seq.fps, hand_seq.fps
        ));
    }
    let n = model.num_joints();
    if body_seq.num_joints() != n || hand_seq.num_joints() != n {
        return invalid(format!(
            "joint count mismatch: model {n}, body {}, hand {}",
            body_seq.num_joints(),
            hand_seq.num_joints()
        ));
    }
    let mut out = body_seq.clone();
    for (k, frame) in out.frames.iter_mut().enumerate() {
        let src = &hand_seq.frames[(start + k) % hand_seq.len()];
        for &j in &model.finger_joints {
            frame.joint_rotations[j] = src.joint_rotations[j];
        }
    }
    Ok(out)
}
