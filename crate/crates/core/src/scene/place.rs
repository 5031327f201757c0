//! Actor posing and rejection-sampled ground placement.

use rand::Rng;

use super::camera::{Camera, Intrinsics};
use super::spec::{ActorSpec, Placement};
use crate::body_model::{BodyModel, PosedMesh, ShapeVector};
use crate::collision::{meshes_collide, Aabb, Bvh, Plane};
use crate::error::Result;
use crate::math::{Mat3, Rigid, Vec3};
use crate::motion::Subsequence;

/// Attempts per actor before it is dropped from the scene.
pub const MAX_PLACEMENT_TRIES: usize = 100;

/// Actors must stay this far in front of the camera center (m).
const NEAR_MARGIN: f64 = 0.5;

/// Model-to-world transform: rotates by `yaw` about +y around `anchor` and
/// moves the anchor's ground projection to `(x, 0, z)`.
pub fn actor_transform(anchor: Vec3<f64>, placement: &Placement) -> Rigid<f64> {
    let r = Mat3::rot_y(placement.yaw);
    let a = r.mul_vec(Vec3::new(anchor.x, 0.0, anchor.z));
    Rigid::new(r, Vec3::new(placement.x - a.x, 0.0, placement.z - a.z))
}

/// Model-space meshes for every frame of a motion.
pub fn pose_local(
    model: &BodyModel<f64>,
    shape: &ShapeVector<f64>,
    motion: &Subsequence<f64>,
) -> Result<Vec<PosedMesh<f64>>> {
    motion.frames.iter().map(|f| model.pose_mesh(shape, f)).collect()
}

/// World-space vertex buffers of posed model-space frames.
pub fn world_frames(local: &[PosedMesh<f64>], root: usize, placement: &Placement) -> Vec<Vec<Vec3<f64>>> {
    let t = actor_transform(local[0].joints[root], placement);
    local
        .iter()
        .map(|m| m.vertices.iter().map(|&v| t.apply(v)).collect())
        .collect()
}

/// World-space vertices of a placed actor, one buffer per frame.
pub fn pose_actor_frames(model: &BodyModel<f64>, actor: &ActorSpec) -> Result<Vec<Vec<Vec3<f64>>>> {
    let local = pose_local(model, &actor.shape, &actor.motion)?;
    Ok(world_frames(&local, model.root(), &actor.placement))
}

/// Ground area where actor roots are sampled: depths ahead of the camera
/// center and a lateral extent that grows with the view frustum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundRegion {
    pub center_x: f64,
    /// Depth origin of the lateral extent (the camera center z).
    pub camera_z: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Lateral half-extent per meter of depth.
    pub half_width_per_depth: f64,
}

impl GroundRegion {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let z = rng.random_range(self.z_min..=self.z_max);
        let hw = (z - self.camera_z).max(0.0) * self.half_width_per_depth;
        let x = self.center_x + rng.random_range(-hw..=hw);
        (x, z)
    }
}

/// Ground region for a forward-looking camera: depths `[min_depth,
/// max_depth]` and 90% of the horizontal field of view.
pub fn ground_region(camera: &Camera, min_depth: f64, max_depth: f64) -> GroundRegion {
    let c = camera.center();
    let k = &camera.intrinsics;
    GroundRegion {
        center_x: c.x,
        camera_z: c.z,
        z_min: c.z + min_depth,
        z_max: c.z + max_depth.max(min_depth),
        half_width_per_depth: 0.9 * (k.width as f64 / 2.0) / k.focal,
    }
}

/// Camera for a single actor: looks along +z at the actor's frame-0 root from
/// `depth` meters away.
pub fn shof_camera(intrinsics: Intrinsics, root: Vec3<f64>, depth: f64) -> Camera {
    Camera::looking_forward(intrinsics, Vec3::new(root.x, root.y, root.z - depth))
}

/// An actor to be placed, already posed in model space.
pub struct Candidate<'a> {
    pub local: &'a [PosedMesh<f64>],
}

struct Placed {
    frames: Vec<Vec<Vec3<f64>>>,
    boxes: Vec<Aabb<f64>>,
    bvh: Option<Bvh<f64>>,
}

fn boxes(frames: &[Vec<Vec3<f64>>]) -> Vec<Aabb<f64>> {
    frames.iter().map(Aabb::from_points).collect()
}

/// Whether the root joint of every frame projects into every frame's image.
fn roots_visible(local: &[PosedMesh<f64>], root: usize, t: &Rigid<f64>, cameras: &[Camera]) -> bool {
    local.iter().zip(cameras).all(|(m, cam)| {
        cam.project(t.apply(m.joints[root]))
            .is_some_and(|uv| cam.in_image(uv))
    })
}

/// Places actors by rejection sampling in `region`. Each actor gets up to
/// [`MAX_PLACEMENT_TRIES`] attempts and is dropped (`None`) if none passes:
/// root visible in every frame, in front of the billboard, clear of the near
/// margin and free of collisions with already placed actors.
pub fn place_actors<R: Rng + ?Sized>(
    rng: &mut R,
    model: &BodyModel<f64>,
    actors: &[Candidate<'_>],
    cameras: &[Camera],
    region: &GroundRegion,
    billboard: &Plane<f64>,
) -> Result<Vec<Option<Placement>>> {
    let root = model.root();
    let near_z = cameras[0].center().z + NEAR_MARGIN;
    let mut placed: Vec<Placed> = Vec::new();
    let mut out = Vec::with_capacity(actors.len());
    for cand in actors {
        let mut result = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let (x, z) = region.sample(rng);
            let placement = Placement {
                x,
                z,
                yaw: rng.random_range(0.0..std::f64::consts::TAU),
            };
            let t = actor_transform(cand.local[0].joints[root], &placement);
            if !roots_visible(cand.local, root, &t, cameras) {
                continue;
            }
            let frames = world_frames(cand.local, root, &placement);
            let bx = boxes(&frames);
            if bx.iter().any(|b| billboard.is_beyond(b.max) || b.min.z <= near_z) {
                continue;
            }
            let mut bvh: Option<Bvh<f64>> = None;
            if !clear_of(&frames, &bx, &mut bvh, &mut placed, model)? {
                continue;
            }
            placed.push(Placed { frames, boxes: bx, bvh });
            result = Some(placement);
            break;
        }
        out.push(result);
    }
    Ok(out)
}

/// Frame-by-frame collision test of a candidate against placed actors;
/// hierarchies are built lazily on the first overlapping bounding box.
fn clear_of(
    frames: &[Vec<Vec3<f64>>],
    bx: &[Aabb<f64>],
    bvh: &mut Option<Bvh<f64>>,
    placed: &mut [Placed],
    model: &BodyModel<f64>,
) -> Result<bool> {
    for p in placed.iter_mut() {
        for f in 0..frames.len() {
            if !bx[f].overlaps(&p.boxes[f]) {
                continue;
            }
            let a = match bvh {
                Some(b) => b,
                None => bvh.insert(Bvh::build(&frames[0], &model.faces)?),
            };
            let b = match &mut p.bvh {
                Some(b) => b,
                None => p.bvh.insert(Bvh::build(&p.frames[0], &model.faces)?),
            };
            a.refit(&frames[f])?;
            b.refit(&p.frames[f])?;
            if meshes_collide(a, &frames[f], b, &p.frames[f]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{DeskModelOptions, Gender, PoseFrame};
    use crate::scene::spec::Placement;
    use rand::SeedableRng;

    #[test]
    fn transform_moves_anchor_to_placement() {
        let anchor = Vec3::new(0.3, 0.9, -0.2);
        let p = Placement { x: 1.5, z: 6.0, yaw: 0.7 };
        let t = actor_transform(anchor, &p);
        let w = t.apply(anchor);
        assert!((w.x - 1.5).abs() < 1e-12 && (w.z - 6.0).abs() < 1e-12 && (w.y - 0.9).abs() < 1e-12);
    }

    #[test]
    fn placed_actors_do_not_collide() {
        let model = BodyModel::<f64>::desk(&DeskModelOptions::coarse(false));
        let shape = ShapeVector::zeros(model.num_shape_coeffs(), Gender::Male);
        let motion = Subsequence {
            source_id: "rest".into(),
            frame_range: [0, 3],
            frames: vec![PoseFrame::rest(model.num_joints()); 3],
        };
        let local = pose_local(&model, &shape, &motion).unwrap();
        let intr = Intrinsics { focal: 500.0, cx: 160.0, cy: 160.0, width: 320, height: 320 };
        let cam = Camera::looking_forward(intr, Vec3::new(0.0, 1.0, 0.0));
        let cams = vec![cam; 3];
        // a cramped region forces rejections
        let region = GroundRegion { center_x: 0.0, camera_z: 0.0, z_min: 4.0, z_max: 4.6, half_width_per_depth: 0.15 };
        let plane = Plane { normal: Vec3::new(0.0, 0.0, 1.0), offset: 12.0 };
        let cands: Vec<Candidate> = (0..6).map(|_| Candidate { local: &local }).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let out = place_actors(&mut rng, &model, &cands, &cams, &region, &plane).unwrap();
        assert!(out[0].is_some());
        let placed: Vec<_> = out.iter().flatten().collect();
        assert!(placed.len() < 6, "region too small for six actors");
        let frames: Vec<_> = placed.iter().map(|p| world_frames(&local, model.root(), p)).collect();
        let report = crate::collision::validate_placement(&model, &frames, None, &plane, false).unwrap();
        assert!(report.is_valid(), "{report:?}");
    }
}
