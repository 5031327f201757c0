//! Parametric articulated body: shape blend shapes, kinematic tree, linear
//! blend skinning and truncated-Gaussian shape sampling.

mod desk;
mod io;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{Mat3, Rigid, Vec3};
use crate::scalar::Real;

pub use desk::{DeskModelOptions, DESK_BODY_JOINTS, DESK_FINGER_JOINTS};
pub use io::MODEL_SCHEMA_VERSION;

/// Number of resamples after which truncated-Gaussian sampling gives up.
pub const MAX_SHAPE_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

/// Shape coefficients in standard-deviation units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShapeVector<T> {
    pub beta: Vec<T>,
    pub gender: Gender,
}

impl<T: Real> ShapeVector<T> {
    pub fn zeros(n: usize, gender: Gender) -> Self {
        Self {
            beta: vec![T::zero(); n],
            gender,
        }
    }
}

/// One frame of articulation: axis-angle rotation per joint plus root translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PoseFrame<T> {
    pub root_translation: Vec3<T>,
    pub joint_rotations: Vec<Vec3<T>>,
}

impl<T: Real> PoseFrame<T> {
    pub fn rest(n_joints: usize) -> Self {
        Self {
            root_translation: Vec3::zero(),
            joint_rotations: vec![Vec3::zero(); n_joints],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.root_translation.is_finite() && self.joint_rotations.iter().all(|r| r.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    /// Nonzero label written into segmentation masks.
    pub id: u16,
    pub name: String,
}

/// Per-gender Gaussian statistics of the shape coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenderStats {
    pub female_mean: Vec<f64>,
    pub female_std: Vec<f64>,
    pub male_mean: Vec<f64>,
    pub male_std: Vec<f64>,
}

impl GenderStats {
    /// Zero-mean, unit-variance statistics for every coefficient.
    pub fn standard(n: usize) -> Self {
        Self {
            female_mean: vec![0.0; n],
            female_std: vec![1.0; n],
            male_mean: vec![0.0; n],
            male_std: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.female_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.female_mean.is_empty()
    }

    fn for_gender(&self, g: Gender) -> (&[f64], &[f64]) {
        match g {
            Gender::Female => (&self.female_mean, &self.female_std),
            Gender::Male => (&self.male_mean, &self.male_std),
        }
    }
}

/// Skinned template mesh with a linear shape space and a kinematic tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BodyModel<T> {
    pub name: String,
    pub joint_names: Vec<String>,
    /// Parent joint per joint; exactly one root with `None`.
    pub parent: Vec<Option<usize>>,
    /// Joints whose rotations come from hand motion; empty for body-only models.
    pub finger_joints: Vec<usize>,
    pub template_vertices: Vec<Vec3<T>>,
    pub faces: Vec<[u32; 3]>,
    /// `shape_basis[k][v]` is the displacement of vertex `v` per unit of coefficient `k`.
    pub shape_basis: Vec<Vec<Vec3<T>>>,
    /// Sparse `(vertex, weight)` rows, one per joint.
    pub joint_regressor: Vec<Vec<(u32, T)>>,
    /// Sparse `(joint, weight)` rows, one per vertex.
    pub skin_weights: Vec<Vec<(u32, T)>>,
    pub uv_coords: Vec<[T; 2]>,
    pub parts: Vec<Part>,
    pub part_of_face: Vec<u16>,
    /// Unordered part pairs excluded from self-collision checks.
    pub part_adjacency: Vec<(u16, u16)>,
}

/// Output of [`BodyModel::pose_mesh`].
#[derive(Clone, Debug)]
pub struct PosedMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    /// World position of every joint after articulation.
    pub joints: Vec<Vec3<T>>,
    /// Per-joint skinning transform mapping shaped rest space to world space.
    pub joint_transforms: Vec<Rigid<T>>,
}

impl<T: Real> BodyModel<T> {
    /// Procedurally generated humanoid used when no model file is supplied.
    pub fn desk(opts: &DeskModelOptions) -> Self {
        desk::build(opts)
    }

    pub fn num_vertices(&self) -> usize {
        self.template_vertices.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parent.len()
    }

    pub fn num_shape_coeffs(&self) -> usize {
        self.shape_basis.len()
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(Option::is_none).unwrap_or(0)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn part_by_name(&self, name: &str) -> Option<u16> {
        self.parts.iter().find(|p| p.name == name).map(|p| p.id)
    }

    pub fn has_fingers(&self) -> bool {
        !self.finger_joints.is_empty()
    }

    /// Joints in an order where every parent precedes its children.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.num_joints();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (j, p) in self.parent.iter().enumerate() {
            match p {
                Some(p) if *p < n => children[*p].push(j),
                Some(p) => return invalid(format!("joint {j} has out-of-range parent {p}")),
                None => roots.push(j),
            }
        }
        if roots.len() != 1 {
            return invalid(format!("kinematic tree must have one root, found {}", roots.len()));
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = roots;
        while let Some(j) = stack.pop() {
            order.push(j);
            stack.extend(children[j].iter().rev().copied());
        }
        if order.len() != n {
            return invalid("kinematic tree contains a cycle or disconnected joints");
        }
        Ok(order)
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<()> {
        let nv = self.num_vertices();
        let nj = self.num_joints();
        if nv == 0 || self.faces.is_empty() {
            return invalid("model has no geometry");
        }
        if self.joint_names.len() != nj {
            return invalid("joint_names length differs from parent length");
        }
        self.topological_order()?;
        if self.joint_regressor.len() != nj {
            return invalid("joint_regressor must have one row per joint");
        }
        if self.skin_weights.len() != nv || self.uv_coords.len() != nv {
            return invalid("skin_weights and uv_coords need one row per vertex");
        }
        for (k, basis) in self.shape_basis.iter().enumerate() {
            if basis.len() != nv {
                return invalid(format!("shape basis {k} has {} rows, expected {nv}", basis.len()));
            }
        }
        for f in &self.faces {
            if f.iter().any(|&i| i as usize >= nv) {
                return invalid(format!("face {f:?} references a missing vertex"));
            }
        }
        for (v, row) in self.skin_weights.iter().enumerate() {
            let mut sum = 0.0;
            for &(j, w) in row {
                let w = w.as_f64();
                if j as usize >= nj || w < 0.0 {
                    return invalid(format!("vertex {v} has invalid skin weight ({j}, {w})"));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return invalid(format!("skin weights of vertex {v} sum to {sum}"));
            }
        }
        for row in &self.joint_regressor {
            if row.iter().any(|&(v, _)| v as usize >= nv) {
                return invalid("joint regressor references a missing vertex");
            }
        }
        if self.part_of_face.len() != self.faces.len() {
            return invalid("part_of_face must have one entry per face");
        }
        let known = |id: u16| self.parts.iter().any(|p| p.id == id);
        if self.parts.iter().any(|p| p.id == 0) {
            return invalid("part id 0 is reserved for background");
        }
        if let Some(bad) = self.part_of_face.iter().find(|&&p| !known(p)) {
            return invalid(format!("face references unknown part {bad}"));
        }
        if let Some(bad) = self.part_adjacency.iter().find(|(a, b)| !known(*a) || !known(*b)) {
            return invalid(format!("adjacency references unknown part pair {bad:?}"));
        }
        if let Some(bad) = self.finger_joints.iter().find(|&&j| j >= nj) {
            return invalid(format!("finger joint {bad} out of range"));
        }
        Ok(())
    }

    /// Template plus the linear combination of shape displacements.
    pub fn shape_mesh(&self, shape: &ShapeVector<T>) -> Result<Vec<Vec3<T>>> {
        if shape.beta.len() != self.num_shape_coeffs() {
            return invalid(format!(
                "shape has {} coefficients, model expects {}",
                shape.beta.len(),
                self.num_shape_coeffs()
            ));
        }
        let mut out = self.template_vertices.clone();
        for (basis, &b) in self.shape_basis.iter().zip(&shape.beta) {
            if b == T::zero() {
                continue;
            }
            for (v, d) in out.iter_mut().zip(basis) {
                *v += *d * b;
            }
        }
        Ok(out)
    }

    /// Regresses joint locations from (shaped) vertices.
    pub fn joint_locations(&self, vertices: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
        if vertices.len() != self.num_vertices() {
            return invalid(format!(
                "expected {} vertices, got {}",
                self.num_vertices(),
                vertices.len()
            ));
        }
        Ok(self
            .joint_regressor
            .iter()
            .map(|row| {
                row.iter()
                    .fold(Vec3::zero(), |acc, &(v, w)| acc + vertices[v as usize] * w)
            })
            .collect())
    }

    /// Forward kinematics followed by linear blend skinning.
    pub fn pose_mesh(&self, shape: &ShapeVector<T>, pose: &PoseFrame<T>) -> Result<PosedMesh<T>> {
        if pose.joint_rotations.len() != self.num_joints() {
            return invalid(format!(
                "pose has {} joints, model has {}",
                pose.joint_rotations.len(),
                self.num_joints()
            ));
        }
        if !pose.is_finite() {
            return invalid("pose contains non-finite values");
        }
        let shaped = self.shape_mesh(shape)?;
        let rest_joints = self.joint_locations(&shaped)?;
        let order = self.topological_order()?;

        let mut world = vec![Rigid::identity(); self.num_joints()];
        for &j in &order {
            let rot = Mat3::from_axis_angle(pose.joint_rotations[j]);
            world[j] = match self.parent[j] {
                None => Rigid::new(rot, rest_joints[j]),
                Some(p) => world[p].compose(&Rigid::new(rot, rest_joints[j] - rest_joints[p])),
            };
        }

        let root_shift = Rigid::new(Mat3::identity(), pose.root_translation);
        let joint_transforms: Vec<Rigid<T>> = world
            .iter()
            .zip(&rest_joints)
            .map(|(g, &jr)| {
                // G_j * translate(-J_j), then the global root translation
                let local = Rigid::new(g.rotation, g.translation - g.rotation.mul_vec(jr));
                root_shift.compose(&local)
            })
            .collect();

        let vertices = shaped
            .iter()
            .zip(&self.skin_weights)
            .map(|(&v, row)| {
                row.iter().fold(Vec3::zero(), |acc, &(j, w)| {
                    acc + joint_transforms[j as usize].apply(v) * w
                })
            })
            .collect();
        let joints = world
            .iter()
            .map(|g| g.translation + pose.root_translation)
            .collect();
        Ok(PosedMesh {
            vertices,
            joints,
            joint_transforms,
        })
    }

    /// Whether two part ids are exempt from self-collision checks.
    pub fn parts_adjacent(&self, a: u16, b: u16) -> bool {
        self.part_adjacency
            .iter()
            .any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
    }
}

/// Draws a shape vector from the gender's Gaussian, truncated to `±bound`
/// standard deviations per coefficient by rejection.
pub fn sample_shape<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    stats: &GenderStats,
    gender: Gender,
    bound: f64,
) -> Result<ShapeVector<T>> {
    if !(bound > 0.0) {
        return invalid(format!("shape bound must be positive, got {bound}"));
    }
    let (mean, std) = stats.for_gender(gender);
    if mean.len() != std.len() {
        return invalid("gender statistics have mismatched lengths");
    }
    let mut beta = Vec::with_capacity(mean.len());
    for (&m, &s) in mean.iter().zip(std) {
        if !(s > 0.0) {
            return invalid(format!("shape std must be positive, got {s}"));
        }
        let mut accepted = None;
        for _ in 0..MAX_SHAPE_RESAMPLES {
            if let Some(z) = truncated_normal_draw(rng, bound) {
                accepted = Some(m + s * z);
                break;
            }
        }
        let x = accepted.ok_or_else(|| {
            Error::Internal(format!(
                "truncated shape sampling did not converge in {MAX_SHAPE_RESAMPLES} draws"
            ))
        })?;
        beta.push(T::lit(x));
    }
    Ok(ShapeVector { beta, gender })
}

/// One proposal of an exact standard normal truncated to `[-bound, bound]`.
///
/// Wide bounds propose from the normal itself; narrow bounds propose
/// uniformly and accept with the normal density ratio, keeping the
/// acceptance rate above `exp(-1/2)` in both regimes.
fn truncated_normal_draw<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> Option<f64> {
    if bound >= 1.0 {
        let z: f64 = rng.sample(StandardNormal);
        (z.abs() <= bound).then_some(z)
    } else {
        let z = rng.random_range(-bound..=bound);
        let u: f64 = rng.random();
        (u <= (-0.5 * z * z).exp()).then_some(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_model() -> BodyModel<f64> {
        // two joints, one triangle per joint, one shape coefficient
        BodyModel {
            name: "tiny".into(),
            joint_names: vec!["root".into(), "child".into()],
            parent: vec![None, Some(0)],
            finger_joints: vec![],
            template_vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
            ],
            faces: vec![[0, 1, 2], [1, 3, 2]],
            shape_basis: vec![vec![Vec3::new(0.0, 0.1, 0.0); 4]],
            joint_regressor: vec![vec![(0, 1.0)], vec![(1, 1.0)]],
            skin_weights: vec![
                vec![(0, 1.0)],
                vec![(0, 0.5), (1, 0.5)],
                vec![(0, 1.0)],
                vec![(1, 1.0)],
            ],
            uv_coords: vec![[0.0, 0.0]; 4],
            parts: vec![
                Part { id: 1, name: "root".into() },
                Part { id: 2, name: "child".into() },
            ],
            part_of_face: vec![1, 2],
            part_adjacency: vec![(1, 2)],
        }
    }

    #[test]
    fn tiny_model_is_valid() {
        tiny_model().validate().unwrap();
    }

    #[test]
    fn shape_dimension_mismatch_is_rejected() {
        let m = tiny_model();
        let err = m.shape_mesh(&ShapeVector::zeros(3, Gender::Male)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn one_hot_regressor_selects_vertices() {
        let m = tiny_model();
        let j = m.joint_locations(&m.template_vertices).unwrap();
        assert_eq!(j[0], m.template_vertices[0]);
        assert_eq!(j[1], m.template_vertices[1]);
    }

    #[test]
    fn uniform_regressor_gives_centroid() {
        let mut m = tiny_model();
        m.joint_regressor[0] = (0..4).map(|v| (v, 0.25)).collect();
        let j = m.joint_locations(&m.template_vertices).unwrap();
        assert!((j[0] - Vec3::new(0.75, 0.25, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn joint_locations_rejects_wrong_count() {
        let m = tiny_model();
        assert!(m.joint_locations(&m.template_vertices[..2]).is_err());
    }

    #[test]
    fn bending_child_moves_only_weighted_vertices() {
        let m = tiny_model();
        let mut pose = PoseFrame::rest(2);
        pose.joint_rotations[1] = Vec3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let posed = m.pose_mesh(&ShapeVector::zeros(1, Gender::Female), &pose).unwrap();
        // vertex 3 rotates 90 degrees about the child joint at (1,0,0)
        assert!((posed.vertices[3] - Vec3::new(1.0, 1.0, 0.0)).max_abs() < 1e-12);
        // vertex 1 sits on the pivot and stays put
        assert!((posed.vertices[1] - Vec3::new(1.0, 0.0, 0.0)).max_abs() < 1e-12);
        assert_eq!(posed.vertices[0], Vec3::zero());
    }

    #[test]
    fn non_finite_pose_is_rejected() {
        let m = tiny_model();
        let mut pose = PoseFrame::rest(2);
        pose.joint_rotations[0].x = f64::NAN;
        assert!(m.pose_mesh(&ShapeVector::zeros(1, Gender::Male), &pose).is_err());
        let short = PoseFrame::rest(1);
        assert!(m.pose_mesh(&ShapeVector::zeros(1, Gender::Male), &short).is_err());
    }

    #[test]
    fn cyclic_tree_is_rejected() {
        let mut m = tiny_model();
        m.parent = vec![Some(1), Some(0)];
        assert!(m.validate().is_err());
        m.parent = vec![None, None];
        assert!(m.validate().is_err());
    }

    #[test]
    fn bad_skin_weights_are_rejected() {
        let mut m = tiny_model();
        m.skin_weights[1] = vec![(0, 0.7), (1, 0.7)];
        assert!(m.validate().is_err());
        let mut m = tiny_model();
        m.part_of_face[0] = 9;
        assert!(m.validate().is_err());
    }

    #[test]
    fn sample_shape_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let stats = GenderStats::standard(10);
        for bound in [3.0, 2.7] {
            for _ in 0..1000 {
                let s: ShapeVector<f64> = sample_shape(&mut rng, &stats, Gender::Male, bound).unwrap();
                assert_eq!(s.beta.len(), 10);
                assert!(s.beta.iter().all(|b| b.abs() <= bound));
            }
        }
    }

    #[test]
    fn degenerate_bound_collapses_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let stats = GenderStats::standard(10);
        for _ in 0..100 {
            let s: ShapeVector<f64> =
                sample_shape(&mut rng, &stats, Gender::Female, 1e-9).unwrap();
            assert!(s.beta.iter().all(|b| b.abs() <= 1e-9));
        }
        assert!(sample_shape::<f64, _>(&mut rng, &stats, Gender::Female, 0.0).is_err());
        assert!(sample_shape::<f64, _>(&mut rng, &stats, Gender::Female, f64::NAN).is_err());
    }

    #[test]
    fn narrow_bound_sampler_matches_truncated_variance() {
        // variance of N(0,1) truncated to [-b,b]:
        // 1 - 2 b phi(b) / (2 Phi(b) - 1), evaluated for b = 0.5 by Simpson quadrature
        let b = 0.5f64;
        let n = 2000;
        let h = 2.0 * b / n as f64;
        let (mut z0, mut z2) = (0.0, 0.0);
        for i in 0..=n {
            let x = -b + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let p = (-0.5 * x * x).exp();
            z0 += w * p;
            z2 += w * p * x * x;
        }
        let expected = z2 / z0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..200_000)
            .filter_map(|_| truncated_normal_draw(&mut rng, b))
            .collect();
        let var = draws.iter().map(|z| z * z).sum::<f64>() / draws.len() as f64;
        assert!((var - expected).abs() < 0.002, "{var} vs {expected}");
    }
}
