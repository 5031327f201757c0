//! Triangle-level collision detection with bounding volume hierarchies.
//!
//! Inter-actor queries traverse two hierarchies simultaneously; self
//! queries traverse one hierarchy against itself and skip triangle pairs
//! that share a vertex or whose parts are declared adjacent in the model.

mod aabb;
mod bvh;
mod tri_tri;

use serde::{Deserialize, Serialize};

pub use aabb::Aabb;
pub use bvh::{Bvh, Node, NodeKind, MAX_LEAF_SIZE};
pub use tri_tri::{is_degenerate, triangles_intersect, DEGENERATE_AREA};

use crate::body_model::BodyModel;
use crate::error::Result;
use crate::math::Vec3;
use crate::scalar::Real;
use bvh::triangle;

/// All intersecting `(face_a, face_b)` pairs between two meshes, sorted.
///
/// Both hierarchies must be fitted to the vertex buffers passed here.
pub fn mesh_pair_collision<T: Real>(
    bvh_a: &Bvh<T>,
    verts_a: &[Vec3<T>],
    bvh_b: &Bvh<T>,
    verts_b: &[Vec3<T>],
) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    bvh_a.overlapping_leaves(bvh_b, |la, lb| {
        for &ta in la {
            let tri_a = triangle(verts_a, &bvh_a.faces()[ta as usize]);
            let box_a = Aabb::from_triangle(&tri_a);
            for &tb in lb {
                let tri_b = triangle(verts_b, &bvh_b.faces()[tb as usize]);
                if box_a.overlaps(&Aabb::from_triangle(&tri_b)) && triangles_intersect(&tri_a, &tri_b) {
                    out.push((ta, tb));
                }
            }
        }
        true
    });
    out.sort_unstable();
    out
}

/// Early-exit variant of [`mesh_pair_collision`].
pub fn meshes_collide<T: Real>(
    bvh_a: &Bvh<T>,
    verts_a: &[Vec3<T>],
    bvh_b: &Bvh<T>,
    verts_b: &[Vec3<T>],
) -> bool {
    let mut hit = false;
    bvh_a.overlapping_leaves(bvh_b, |la, lb| {
        for &ta in la {
            let tri_a = triangle(verts_a, &bvh_a.faces()[ta as usize]);
            for &tb in lb {
                let tri_b = triangle(verts_b, &bvh_b.faces()[tb as usize]);
                if triangles_intersect(&tri_a, &tri_b) {
                    hit = true;
                    return false;
                }
            }
        }
        true
    });
    hit
}

/// Dense symmetric lookup of adjacent part pairs.
#[derive(Clone, Debug)]
pub struct PartAdjacency {
    size: usize,
    bits: Vec<bool>,
}

impl PartAdjacency {
    pub fn new(pairs: &[(u16, u16)]) -> Self {
        let size = pairs
            .iter()
            .map(|&(a, b)| a.max(b) as usize + 1)
            .max()
            .unwrap_or(0);
        let mut bits = vec![false; size * size];
        for &(a, b) in pairs {
            bits[a as usize * size + b as usize] = true;
            bits[b as usize * size + a as usize] = true;
        }
        Self { size, bits }
    }

    #[inline]
    pub fn contains(&self, a: u16, b: u16) -> bool {
        let (a, b) = (a as usize, b as usize);
        a < self.size && b < self.size && self.bits[a * self.size + b]
    }
}

/// Intersecting same-mesh face pairs `(i, j)` with `i < j`, sorted, excluding
/// pairs that share a vertex index and pairs of adjacent parts.
pub fn self_collision<T: Real>(
    bvh: &Bvh<T>,
    verts: &[Vec3<T>],
    part_of_face: &[u16],
    part_adjacency: &[(u16, u16)],
) -> Vec<(u32, u32)> {
    let adjacency = PartAdjacency::new(part_adjacency);
    let faces = bvh.faces();
    let mut out = Vec::new();
    let test = |i: u32, j: u32, out: &mut Vec<(u32, u32)>| {
        let (fi, fj) = (&faces[i as usize], &faces[j as usize]);
        if fi.iter().any(|v| fj.contains(v)) {
            return;
        }
        if adjacency.contains(part_of_face[i as usize], part_of_face[j as usize]) {
            return;
        }
        let (ti, tj) = (triangle(verts, fi), triangle(verts, fj));
        if Aabb::from_triangle(&ti).overlaps(&Aabb::from_triangle(&tj)) && triangles_intersect(&ti, &tj) {
            out.push((i.min(j), i.max(j)));
        }
    };
    bvh.self_overlapping_leaves(|la, lb, same| {
        for (k, &i) in la.iter().enumerate() {
            let rest = if same { &lb[k + 1..] } else { lb };
            for &j in rest {
                test(i, j, &mut out);
            }
        }
    });
    out.sort_unstable();
    out
}

/// Half-space boundary: points with `normal · p > offset` lie beyond the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Plane<T> {
    pub normal: Vec3<T>,
    pub offset: T,
}

impl<T: Real> Plane<T> {
    #[inline]
    pub fn is_beyond(&self, p: Vec3<T>) -> bool {
        self.normal.dot(p) > self.offset
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlacementReport {
    /// First `(frame, actor_a, actor_b)` with an inter-actor collision.
    pub collision: Option<(usize, usize, usize)>,
    /// First `(frame, actor)` with a vertex beyond the background plane.
    pub billboard_crossing: Option<(usize, usize)>,
    /// First `(frame, actor)` with a vertex outside the ground bound.
    pub out_of_bounds: Option<(usize, usize)>,
    /// `(frame, actor, intersecting pairs)` for every self-colliding actor frame.
    pub self_collisions: Vec<(usize, usize, usize)>,
}

impl PlacementReport {
    pub fn is_valid(&self) -> bool {
        self.collision.is_none() && self.billboard_crossing.is_none() && self.out_of_bounds.is_none()
    }
}

/// Checks a whole subsequence of posed actors.
///
/// `actor_frames[a][f]` is the vertex buffer of actor `a` at frame `f`; all
/// actors share `model`'s topology. Hierarchies are built once on frame 0
/// and refitted per frame. Self-collisions are reported but do not
/// invalidate the placement.
pub fn validate_placement<T: Real>(
    model: &BodyModel<T>,
    actor_frames: &[Vec<Vec<Vec3<T>>>],
    ground_bound: Option<&Aabb<T>>,
    billboard: &Plane<T>,
    check_self: bool,
) -> Result<PlacementReport> {
    let mut report = PlacementReport::default();
    let n_frames = actor_frames.iter().map(Vec::len).min().unwrap_or(0);
    let mut bvhs = actor_frames
        .iter()
        .map(|frames| Bvh::build(&frames[0], &model.faces))
        .collect::<Result<Vec<_>>>()?;
    for f in 0..n_frames {
        for (a, frames) in actor_frames.iter().enumerate() {
            let verts = &frames[f];
            if report.billboard_crossing.is_none() && verts.iter().any(|&p| billboard.is_beyond(p)) {
                report.billboard_crossing = Some((f, a));
            }
            if let Some(bound) = ground_bound {
                if report.out_of_bounds.is_none() && verts.iter().any(|&p| !bound.contains_point(p)) {
                    report.out_of_bounds = Some((f, a));
                }
            }
            if f > 0 {
                bvhs[a].refit(verts)?;
            }
        }
        if report.collision.is_none() {
            'pairs: for a in 0..actor_frames.len() {
                for b in a + 1..actor_frames.len() {
                    if meshes_collide(&bvhs[a], &actor_frames[a][f], &bvhs[b], &actor_frames[b][f]) {
                        report.collision = Some((f, a, b));
                        break 'pairs;
                    }
                }
            }
        }
        if check_self {
            for (a, frames) in actor_frames.iter().enumerate() {
                let pairs = self_collision(&bvhs[a], &frames[f], &model.part_of_face, &model.part_adjacency);
                if !pairs.is_empty() {
                    report.self_collisions.push((f, a, pairs.len()));
                }
            }
        }
        if !check_self && !report.is_valid() {
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{DeskModelOptions, Gender, PoseFrame, ShapeVector};

    fn desk() -> BodyModel<f64> {
        BodyModel::desk(&DeskModelOptions::coarse(false))
    }

    fn shifted(verts: &[Vec3<f64>], d: Vec3<f64>) -> Vec<Vec3<f64>> {
        verts.iter().map(|&p| p + d).collect()
    }

    fn far_plane() -> Plane<f64> {
        Plane {
            normal: Vec3::new(0.0, 0.0, 1.0),
            offset: 100.0,
        }
    }

    #[test]
    fn rest_pose_has_no_self_collision() {
        for opts in [
            DeskModelOptions::coarse(false),
            DeskModelOptions::standard(false),
            DeskModelOptions::standard(true),
        ] {
            let m: BodyModel<f64> = BodyModel::desk(&opts);
            let bvh = Bvh::build(&m.template_vertices, &m.faces).unwrap();
            let pairs = self_collision(&bvh, &m.template_vertices, &m.part_of_face, &m.part_adjacency);
            let named: Vec<_> = pairs
                .iter()
                .take(5)
                .map(|&(i, j)| {
                    (
                        &m.parts[m.part_of_face[i as usize] as usize - 1].name,
                        &m.parts[m.part_of_face[j as usize] as usize - 1].name,
                    )
                })
                .collect();
            assert!(pairs.is_empty(), "{} pairs, e.g. {named:?}", pairs.len());
        }
    }

    #[test]
    fn distant_actors_do_not_collide() {
        let m = desk();
        let a = &m.template_vertices;
        let b = shifted(a, Vec3::new(5.0, 0.0, 0.0));
        let ba = Bvh::build(a, &m.faces).unwrap();
        let bb = Bvh::build(&b, &m.faces).unwrap();
        assert!(mesh_pair_collision(&ba, a, &bb, &b).is_empty());
        assert!(!meshes_collide(&ba, a, &bb, &b));
    }

    #[test]
    fn pair_query_is_symmetric() {
        let m = desk();
        let a = &m.template_vertices;
        let b = shifted(a, Vec3::new(0.1, 0.05, 0.02));
        let ba = Bvh::build(a, &m.faces).unwrap();
        let bb = Bvh::build(&b, &m.faces).unwrap();
        let ab = mesh_pair_collision(&ba, a, &bb, &b);
        let mut ba_pairs: Vec<_> = mesh_pair_collision(&bb, &b, &ba, a)
            .into_iter()
            .map(|(x, y)| (y, x))
            .collect();
        ba_pairs.sort_unstable();
        assert!(!ab.is_empty());
        assert_eq!(ab, ba_pairs);
    }

    #[test]
    fn refit_bounds_contain_posed_triangles() {
        let m = desk();
        let mut pose = PoseFrame::rest(m.num_joints());
        pose.joint_rotations[16] = Vec3::new(0.0, 0.0, -1.2);
        pose.joint_rotations[4] = Vec3::new(0.9, 0.0, 0.0);
        let posed = m
            .pose_mesh(&ShapeVector::zeros(10, Gender::Male), &pose)
            .unwrap();
        let mut bvh = Bvh::build(&m.template_vertices, &m.faces).unwrap();
        bvh.refit(&posed.vertices).unwrap();
        for n in &bvh.nodes {
            if let NodeKind::Leaf { start, count } = n.kind {
                for &t in bvh.leaf_triangles(start, count) {
                    let tri = triangle(&posed.vertices, &m.faces[t as usize]);
                    assert!(n.bound.contains(&Aabb::from_triangle(&tri)));
                }
            }
        }
    }

    #[test]
    fn placement_of_single_and_coincident_actors() {
        let m = desk();
        let frames = vec![m.template_vertices.clone(); 3];
        let single = validate_placement(&m, std::slice::from_ref(&frames), None, &far_plane(), false).unwrap();
        assert!(single.is_valid());
        let both = validate_placement(&m, &[frames.clone(), frames], None, &far_plane(), false).unwrap();
        assert!(!both.is_valid());
        assert_eq!(both.collision, Some((0, 0, 1)));
    }

    #[test]
    fn billboard_crossing_invalidates() {
        let m = desk();
        let frames = vec![shifted(&m.template_vertices, Vec3::new(0.0, 0.0, 11.9))];
        let plane = Plane {
            normal: Vec3::new(0.0, 0.0, 1.0),
            offset: 12.0,
        };
        let r = validate_placement(&m, &[frames], None, &plane, false).unwrap();
        assert_eq!(r.billboard_crossing, Some((0, 0)));
        assert!(!r.is_valid());
    }

    #[test]
    fn ground_bound_is_enforced() {
        let m = desk();
        let frames = vec![m.template_vertices.clone()];
        let tight = Aabb::new(Vec3::new(-0.1, 0.0, -0.1), Vec3::new(0.1, 2.0, 0.1));
        let r = validate_placement(&m, &[frames], Some(&tight), &far_plane(), false).unwrap();
        assert_eq!(r.out_of_bounds, Some((0, 0)));
    }
}
