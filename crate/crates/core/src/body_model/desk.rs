//! Procedural desk-scale humanoid.
//!
//! Every body part is a closed tapered capsule with an elliptic cross
//! section, attached to one joint. The joint regressor reads each joint as
//! the centroid of the first cylinder ring of its capsule, so the skeleton
//! follows the shape coefficients. The rest pose is a T-pose facing +z with
//! y up and the feet on the y = 0 plane.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{BodyModel, Part};
use crate::math::Vec3;
use crate::scalar::Real;

/// Body joints in kinematic-tree order, shared by both model flavours.
pub const DESK_BODY_JOINTS: [&str; 24] = [
    "pelvis",
    "L_hip",
    "R_hip",
    "spine1",
    "L_knee",
    "R_knee",
    "spine2",
    "L_ankle",
    "R_ankle",
    "spine3",
    "L_foot",
    "R_foot",
    "neck",
    "L_collar",
    "R_collar",
    "head",
    "L_shoulder",
    "R_shoulder",
    "L_elbow",
    "R_elbow",
    "L_wrist",
    "R_wrist",
    "L_hand",
    "R_hand",
];

const BODY_PARENTS: [Option<usize>; 24] = [
    None,
    Some(0),
    Some(0),
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(9),
    Some(9),
    Some(12),
    Some(13),
    Some(14),
    Some(16),
    Some(17),
    Some(18),
    Some(19),
    Some(20),
    Some(21),
];

/// Number of finger joints added by the articulated-hand flavour.
pub const DESK_FINGER_JOINTS: usize = 30;

const FINGERS: [&str; 5] = ["thumb", "index", "middle", "ring", "pinky"];

#[derive(Clone, Debug, PartialEq)]
pub struct DeskModelOptions {
    /// Add 15 finger joints per hand.
    pub fingers: bool,
    /// Vertices per cross-section ring on body parts.
    pub ring_segments: usize,
    /// Vertices per cross-section ring on finger phalanges.
    pub finger_ring_segments: usize,
    /// Target axial spacing between cylinder rings (meters).
    pub ring_spacing: f64,
    /// Intermediate rings in each end cap.
    pub cap_rings: usize,
    pub shape_coeffs: usize,
}

impl DeskModelOptions {
    /// Rendering resolution: a few thousand vertices.
    pub fn standard(fingers: bool) -> Self {
        Self {
            fingers,
            ring_segments: 14,
            finger_ring_segments: 6,
            ring_spacing: 0.045,
            cap_rings: 2,
            shape_coeffs: 10,
        }
    }

    /// Collision-test resolution: under 2,000 triangles without fingers.
    pub fn coarse(fingers: bool) -> Self {
        Self {
            fingers,
            ring_segments: 8,
            finger_ring_segments: 4,
            ring_spacing: 0.09,
            cap_rings: 1,
            shape_coeffs: 10,
        }
    }
}

impl Default for DeskModelOptions {
    fn default() -> Self {
        Self::standard(false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Pelvis,
    Torso,
    Neck,
    Head,
    Collar,
    UpperArm,
    Forearm,
    Palm,
    Hand,
    Finger,
    Thigh,
    Calf,
    Foot,
}

impl Class {
    fn is_arm_chain(self) -> bool {
        matches!(
            self,
            Class::UpperArm | Class::Forearm | Class::Palm | Class::Hand | Class::Finger
        )
    }

    fn is_leg(self) -> bool {
        matches!(self, Class::Thigh | Class::Calf | Class::Foot)
    }

    fn is_limb(self) -> bool {
        matches!(
            self,
            Class::UpperArm | Class::Forearm | Class::Thigh | Class::Calf
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CrossAxis {
    X,
    Y,
}

#[derive(Clone, Debug)]
struct Segment {
    joint: usize,
    start: Vec3<f64>,
    end: Vec3<f64>,
    r_start: (f64, f64),
    r_end: (f64, f64),
    cap: (f64, f64),
    cross: CrossAxis,
    /// Joint whose transform blends into the far end of this segment.
    end_child: Option<usize>,
    class: Class,
    side: f64,
    fine: bool,
}

fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
    Vec3::new(x, y, z)
}

struct JointTable {
    names: Vec<String>,
    parent: Vec<Option<usize>>,
    fingers: Vec<usize>,
}

fn joint_table(fingers: bool) -> JointTable {
    let mut names: Vec<String> = DESK_BODY_JOINTS.iter().map(|s| s.to_string()).collect();
    let mut parent = BODY_PARENTS.to_vec();
    let mut finger_joints = Vec::new();
    if fingers {
        for (side, wrist) in [("L", 20usize), ("R", 21usize)] {
            for finger in FINGERS {
                for k in 1..=3 {
                    let idx = names.len();
                    names.push(format!("{side}_{finger}{k}"));
                    parent.push(Some(if k == 1 { wrist } else { idx - 1 }));
                    finger_joints.push(idx);
                }
            }
        }
    }
    JointTable {
        names,
        parent,
        fingers: finger_joints,
    }
}

fn segments(opts: &DeskModelOptions, table: &JointTable) -> Vec<Segment> {
    let mut segs = Vec::new();
    let mut push = |joint: usize,
                    start: Vec3<f64>,
                    end: Vec3<f64>,
                    r_start: (f64, f64),
                    r_end: (f64, f64),
                    cap: (f64, f64),
                    cross: CrossAxis,
                    end_child: Option<usize>,
                    class: Class| {
        segs.push(Segment {
            joint,
            start,
            end,
            r_start,
            r_end,
            cap,
            cross,
            end_child,
            class,
            side: start.x.signum() * (start.x.abs() > 1e-9) as u8 as f64,
            fine: class == Class::Finger,
        });
    };

    use Class::*;
    use CrossAxis::{X, Y};
    let c = (0.35, 0.35);
    push(0, v(0.0, 0.95, 0.0), v(0.0, 1.05, 0.0), (0.14, 0.10), (0.13, 0.095), (0.6, 0.6), X, Some(3), Pelvis);
    push(3, v(0.0, 1.05, 0.0), v(0.0, 1.18, 0.0), (0.13, 0.09), (0.135, 0.095), c, X, Some(6), Torso);
    push(6, v(0.0, 1.18, 0.0), v(0.0, 1.30, 0.0), (0.135, 0.095), (0.14, 0.10), c, X, Some(9), Torso);
    push(9, v(0.0, 1.30, 0.0), v(0.0, 1.50, 0.0), (0.14, 0.10), (0.12, 0.08), c, X, Some(12), Torso);
    push(12, v(0.0, 1.50, 0.0), v(0.0, 1.58, 0.0), (0.05, 0.05), (0.045, 0.045), c, X, Some(15), Neck);
    push(15, v(0.0, 1.58, 0.0), v(0.0, 1.78, 0.0), (0.08, 0.09), (0.075, 0.085), (0.3, 1.0), X, None, Head);

    for side in [1.0, -1.0] {
        let s = |x: f64| x * side;
        // left joints are odd-indexed on the body chain pairs
        let (hip, knee, ankle, foot, collar, shoulder, elbow, wrist, hand) = if side > 0.0 {
            (1, 4, 7, 10, 13, 16, 18, 20, 22)
        } else {
            (2, 5, 8, 11, 14, 17, 19, 21, 23)
        };
        push(hip, v(s(0.09), 0.88, 0.0), v(s(0.09), 0.50, 0.0), (0.075, 0.075), (0.05, 0.05), c, X, Some(knee), Thigh);
        push(knee, v(s(0.09), 0.50, 0.0), v(s(0.09), 0.09, 0.0), (0.05, 0.05), (0.035, 0.035), c, X, Some(ankle), Calf);
        push(ankle, v(s(0.09), 0.09, 0.0), v(s(0.09), 0.04, 0.10), (0.035, 0.03), (0.04, 0.025), c, X, Some(foot), Foot);
        push(foot, v(s(0.09), 0.04, 0.10), v(s(0.09), 0.03, 0.18), (0.04, 0.02), (0.035, 0.015), (0.35, 0.6), X, None, Foot);
        push(collar, v(s(0.05), 1.44, 0.0), v(s(0.19), 1.45, 0.0), (0.045, 0.045), (0.045, 0.045), c, Y, Some(shoulder), Collar);
        push(shoulder, v(s(0.19), 1.45, 0.0), v(s(0.46), 1.45, 0.0), (0.05, 0.05), (0.042, 0.042), c, Y, Some(elbow), UpperArm);
        push(elbow, v(s(0.46), 1.45, 0.0), v(s(0.70), 1.45, 0.0), (0.04, 0.04), (0.032, 0.032), c, Y, Some(wrist), Forearm);
        push(wrist, v(s(0.70), 1.45, 0.0), v(s(0.78), 1.45, 0.0), (0.02, 0.042), (0.018, 0.045), c, Y, Some(hand), Palm);
        if !opts.fingers {
            push(hand, v(s(0.78), 1.45, 0.0), v(s(0.88), 1.45, 0.0), (0.016, 0.042), (0.01, 0.03), (0.35, 0.6), Y, None, Hand);
            continue;
        }
        push(hand, v(s(0.78), 1.45, 0.0), v(s(0.80), 1.45, 0.0), (0.016, 0.042), (0.014, 0.04), c, Y, None, Hand);
        let prefix = if side > 0.0 { "L" } else { "R" };
        for finger in FINGERS {
            let (base, dir, lengths, r0) = match finger {
                "thumb" => (
                    v(s(0.73), 1.445, 0.035),
                    v(s(0.55), 0.0, 0.835).normalized(),
                    [0.035, 0.028, 0.022],
                    0.01,
                ),
                "index" => (v(s(0.80), 1.45, 0.027), v(s(1.0), 0.0, 0.0), [0.040, 0.025, 0.020], 0.0075),
                "middle" => (v(s(0.80), 1.45, 0.009), v(s(1.0), 0.0, 0.0), [0.045, 0.028, 0.022], 0.0075),
                "ring" => (v(s(0.80), 1.45, -0.009), v(s(1.0), 0.0, 0.0), [0.042, 0.026, 0.020], 0.0075),
                _ => (v(s(0.80), 1.45, -0.027), v(s(1.0), 0.0, 0.0), [0.032, 0.020, 0.018], 0.0075),
            };
            let mut p = base;
            let mut r = r0;
            for (k, len) in lengths.iter().enumerate() {
                let joint = table
                    .names
                    .iter()
                    .position(|n| *n == format!("{prefix}_{finger}{}", k + 1))
                    .expect("finger joint registered");
                let q = p + dir * *len;
                let r_next = r * 0.88;
                let child = (k < 2).then_some(joint + 1);
                let cap = if k == 2 { (0.5, 0.8) } else { (0.5, 0.5) };
                push(joint, p, q, (r, r), (r_next, r_next), cap, Y, child, Finger);
                p = q;
                r = r_next;
            }
        }
    }
    segs
}

/// One generated vertex before assembly.
struct RawVertex {
    pos: Vec3<f64>,
    /// Axial parameter: 0 at the joint ring, 1 at the far ring, beyond for caps.
    s: f64,
    /// Closest point on the segment axis.
    axis: Vec3<f64>,
    /// Angle around the axis, or `None` for cap poles.
    phi: Option<f64>,
}

struct Tessellation {
    verts: Vec<RawVertex>,
    faces: Vec<[u32; 3]>,
    /// Local indices of the joint ring (s = 0).
    joint_ring: Vec<u32>,
    s_min: f64,
    s_max: f64,
}

fn tessellate(seg: &Segment, opts: &DeskModelOptions) -> Tessellation {
    let n = if seg.fine {
        opts.finger_ring_segments
    } else {
        opts.ring_segments
    }
    .max(3);
    let axis_vec = seg.end - seg.start;
    let len = axis_vec.norm();
    let d = axis_vec / len;
    let hint = match seg.cross {
        CrossAxis::X => v(1.0, 0.0, 0.0),
        CrossAxis::Y => v(0.0, 1.0, 0.0),
    };
    let e1 = (hint - d * hint.dot(d)).normalized();
    let e2 = d.cross(e1);

    let n_cyl = if seg.fine {
        2
    } else {
        ((len / opts.ring_spacing).round() as usize + 1).max(2)
    };
    // (axial offset from start in meters, radius scale, radii pair at that point)
    let mut rings: Vec<(f64, f64, (f64, f64))> = Vec::new();
    let lerp = |t: f64| {
        (
            seg.r_start.0 + (seg.r_end.0 - seg.r_start.0) * t,
            seg.r_start.1 + (seg.r_end.1 - seg.r_start.1) * t,
        )
    };
    let cap_start = seg.cap.0 * seg.r_start.0.min(seg.r_start.1);
    let cap_end = seg.cap.1 * seg.r_end.0.min(seg.r_end.1);
    let caps = opts.cap_rings;
    for k in (1..=caps).rev() {
        let a = k as f64 / (caps + 1) as f64 * FRAC_PI_2;
        rings.push((-cap_start * a.sin(), a.cos(), seg.r_start));
    }
    let joint_ring_index = rings.len();
    for k in 0..n_cyl {
        let t = k as f64 / (n_cyl - 1) as f64;
        rings.push((t * len, 1.0, lerp(t)));
    }
    for k in 1..=caps {
        let a = k as f64 / (caps + 1) as f64 * FRAC_PI_2;
        rings.push((len + cap_end * a.sin(), a.cos(), seg.r_end));
    }

    let mut verts = Vec::new();
    let pole = |off: f64| {
        let axis = seg.start + d * off;
        RawVertex {
            pos: axis,
            s: off / len,
            axis: seg.start + d * off.clamp(0.0, len),
            phi: None,
        }
    };
    verts.push(pole(-cap_start));
    let mut joint_ring = Vec::new();
    for (ri, &(off, scale, (r1, r2))) in rings.iter().enumerate() {
        let axis_pt = seg.start + d * off;
        for i in 0..n {
            let phi = TAU * i as f64 / n as f64;
            let (sn, cs) = phi.sin_cos();
            let pos = axis_pt + e1 * (r1 * scale * cs) + e2 * (r2 * scale * sn);
            if ri == joint_ring_index {
                joint_ring.push(verts.len() as u32);
            }
            verts.push(RawVertex {
                pos,
                s: off / len,
                axis: seg.start + d * off.clamp(0.0, len),
                phi: Some(phi),
            });
        }
    }
    verts.push(pole(len + cap_end));

    let ring_base = |r: usize| 1 + (r * n) as u32;
    let n32 = n as u32;
    let mut faces = Vec::new();
    for i in 0..n32 {
        let j = (i + 1) % n32;
        faces.push([0, ring_base(0) + j, ring_base(0) + i]);
    }
    for r in 0..rings.len() - 1 {
        let (a0, b0) = (ring_base(r), ring_base(r + 1));
        for i in 0..n32 {
            let j = (i + 1) % n32;
            faces.push([a0 + i, a0 + j, b0 + j]);
            faces.push([a0 + i, b0 + j, b0 + i]);
        }
    }
    let last = ring_base(rings.len() - 1);
    let end_pole = verts.len() as u32 - 1;
    for i in 0..n32 {
        let j = (i + 1) % n32;
        faces.push([last + i, last + j, end_pole]);
    }
    Tessellation {
        verts,
        faces,
        joint_ring,
        s_min: -cap_start / len,
        s_max: 1.0 + cap_end / len,
    }
}

fn skin_row(seg: &Segment, s: f64, parent: Option<usize>) -> Vec<(u32, f64)> {
    const BLEND: f64 = 0.2;
    let w_parent = match parent {
        Some(_) if s < BLEND => 0.5 * (1.0 - s.max(0.0) / BLEND),
        _ => 0.0,
    };
    let w_child = match seg.end_child {
        Some(_) if s > 1.0 - BLEND => 0.5 * (1.0 - (1.0 - s.min(1.0)) / BLEND),
        _ => 0.0,
    };
    let mut row = vec![(seg.joint as u32, 1.0 - w_parent - w_child)];
    if let (Some(p), true) = (parent, w_parent > 0.0) {
        row.push((p as u32, w_parent));
    }
    if let (Some(c), true) = (seg.end_child, w_child > 0.0) {
        row.push((c as u32, w_child));
    }
    row
}

fn shape_displacement(k: usize, seg: &Segment, p: Vec3<f64>, axis: Vec3<f64>) -> Vec3<f64> {
    use Class::*;
    let radial = p - axis;
    let zero = Vec3::zero();
    let torso = matches!(seg.class, Torso | Pelvis);
    match k {
        // stature
        0 => v(0.0, 0.045 * p.y, 0.0),
        // limb girth
        1 if seg.class.is_limb() => radial * 0.10,
        // torso width, arms follow the torso surface
        2 if torso => v(0.10 * radial.x, 0.0, 0.0),
        2 if seg.class == Collar => v(0.013 * seg.side * ((p.x.abs() - 0.05) / 0.14).clamp(0.0, 1.0), 0.0, 0.0),
        2 if seg.class.is_arm_chain() => v(0.013 * seg.side, 0.0, 0.0),
        // chest and belly depth
        3 if torso => v(0.0, 0.0, if radial.z > 0.0 { 0.12 } else { 0.04 } * radial.z),
        // leg length: feet stay on the floor, everything above the hips rises
        4 if seg.class.is_leg() => v(0.0, 0.05 * p.y, 0.0),
        4 => v(0.0, 0.05 * 0.88, 0.0),
        // arm length measured from the shoulder
        5 if seg.class.is_arm_chain() => v(0.06 * (p.x - seg.side * 0.19), 0.0, 0.0),
        // head size
        6 if seg.class == Head => (p - v(0.0, 1.68, 0.0)) * 0.08,
        // hip width
        7 if seg.class == Pelvis => v(0.10 * radial.x, 0.0, 0.0),
        7 if seg.class.is_leg() => v(0.009 * seg.side, 0.0, 0.0),
        // neck length
        8 if seg.class == Neck => v(0.0, 0.15 * (p.y - 1.50).max(0.0), 0.0),
        8 if seg.class == Head => v(0.0, 0.012, 0.0),
        // overall mass
        9 => radial * 0.05,
        _ => zero,
    }
}

fn adjacency(table: &JointTable) -> Vec<(u16, u16)> {
    let part = |j: usize| (j + 1) as u16;
    let is_finger = |j: usize| table.fingers.contains(&j);
    let mut pairs = Vec::new();
    let mut add = |a: usize, b: usize| {
        let (a, b) = (part(a).min(part(b)), part(a).max(part(b)));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    };
    for (j, p) in table.parent.iter().enumerate() {
        if let Some(p) = *p {
            add(j, p);
        }
    }
    let n = table.parent.len();
    for a in 0..n {
        for b in a + 1..n {
            if table.parent[a].is_some()
                && table.parent[a] == table.parent[b]
                && !is_finger(a)
                && !is_finger(b)
            {
                add(a, b);
            }
        }
    }
    if !table.fingers.is_empty() {
        for (side, hand) in [("L", 22usize), ("R", 23usize)] {
            let chain = |f: &str| -> Vec<usize> {
                (1..=3)
                    .map(|k| {
                        table
                            .names
                            .iter()
                            .position(|n| *n == format!("{side}_{f}{k}"))
                            .expect("finger joint")
                    })
                    .collect()
            };
            for w in FINGERS.windows(2) {
                for a in chain(w[0]) {
                    for b in chain(w[1]) {
                        add(a, b);
                    }
                }
            }
            for f in FINGERS {
                for a in chain(f) {
                    add(a, hand);
                }
            }
        }
    }
    pairs
}

pub(super) fn build<T: Real>(opts: &DeskModelOptions) -> BodyModel<T> {
    let table = joint_table(opts.fingers);
    let segs = segments(opts, &table);
    let n_joints = table.names.len();
    let n_coeffs = opts.shape_coeffs;
    const ATLAS_COLS: usize = 8;
    let atlas_rows = n_joints.div_ceil(ATLAS_COLS);

    let mut template = Vec::new();
    let mut faces = Vec::new();
    let mut part_of_face = Vec::new();
    let mut skin = Vec::new();
    let mut uv = Vec::new();
    let mut basis: Vec<Vec<Vec3<f64>>> = vec![Vec::new(); n_coeffs];
    let mut regressor = vec![Vec::new(); n_joints];

    for seg in &segs {
        let tess = tessellate(seg, opts);
        let base = template.len() as u32;
        let (col, row) = (seg.joint % ATLAS_COLS, seg.joint / ATLAS_COLS);
        let (cw, ch) = (1.0 / ATLAS_COLS as f64, 1.0 / atlas_rows as f64);
        for rv in &tess.verts {
            template.push(rv.pos);
            skin.push(skin_row(seg, rv.s, table.parent[seg.joint]));
            // mirrored angle keeps u continuous around the ring without a seam
            let wave = rv.phi.map_or(0.5, |phi| (phi / PI - 1.0).abs());
            let along = (rv.s - tess.s_min) / (tess.s_max - tess.s_min);
            uv.push([
                (col as f64 + 0.05 + 0.9 * wave) * cw,
                (row as f64 + 0.05 + 0.9 * along) * ch,
            ]);
            for (k, b) in basis.iter_mut().enumerate() {
                b.push(shape_displacement(k, seg, rv.pos, rv.axis));
            }
        }
        let w = 1.0 / tess.joint_ring.len() as f64;
        regressor[seg.joint] = tess.joint_ring.iter().map(|&i| (base + i, w)).collect();
        for f in &tess.faces {
            faces.push([base + f[0], base + f[1], base + f[2]]);
            part_of_face.push((seg.joint + 1) as u16);
        }
    }

    let cast_vecs = |vs: &[Vec3<f64>]| vs.iter().map(|p| p.cast::<T>()).collect::<Vec<_>>();
    BodyModel {
        name: if opts.fingers {
            "desk-humanoid-hands".into()
        } else {
            "desk-humanoid".into()
        },
        parts: table
            .names
            .iter()
            .enumerate()
            .map(|(j, n)| Part {
                id: (j + 1) as u16,
                name: n.clone(),
            })
            .collect(),
        part_adjacency: adjacency(&table),
        joint_names: table.names.clone(),
        parent: table.parent.clone(),
        finger_joints: table.fingers.clone(),
        template_vertices: cast_vecs(&template),
        faces,
        shape_basis: basis.iter().map(|b| cast_vecs(b)).collect(),
        joint_regressor: regressor
            .into_iter()
            .map(|row| row.into_iter().map(|(v, w)| (v, T::lit(w))).collect())
            .collect(),
        skin_weights: skin
            .into_iter()
            .map(|row| row.into_iter().map(|(j, w)| (j, T::lit(w))).collect())
            .collect(),
        uv_coords: uv.into_iter().map(|[a, b]| [T::lit(a), T::lit(b)]).collect(),
        part_of_face,
    }
}
