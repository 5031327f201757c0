//! Deterministic synthesis of multi-human animated scenes with per-frame RGB,
//! dense ground-truth optical flow and body-part segmentation, plus `.flo`
//! I/O and endpoint-error evaluation.
//!
//! Geometry kernels are generic over [`scalar::Real`]; the aliases below fix
//! them to `f64`, which the scene, renderer and dataset layers use.

pub mod body_model;
pub mod collision;
pub mod dataset;
pub mod error;
pub mod flow;
pub mod math;
pub mod motion;
pub mod render;
pub mod scalar;
pub mod scene;
pub mod texture_lab;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3 = math::Vec3<f64>;
pub type Rigid = math::Rigid<f64>;
pub type BodyModel = body_model::BodyModel<f64>;
pub type ShapeVector = body_model::ShapeVector<f64>;
pub type PoseFrame = body_model::PoseFrame<f64>;
pub type PosedMesh = body_model::PosedMesh<f64>;
pub type MotionSequence = motion::MotionSequence<f64>;
pub type Subsequence = motion::Subsequence<f64>;
pub type Aabb = collision::Aabb<f64>;
pub type Bvh = collision::Bvh<f64>;
pub type Plane = collision::Plane<f64>;

pub type BodyModel32 = body_model::BodyModel<f32>;
pub type Bvh32 = collision::Bvh<f32>;
