use humanflow::body_model::{sample_shape, DeskModelOptions, Gender, GenderStats};
use humanflow::collision::{mesh_pair_collision, triangles_intersect};
use humanflow::motion::{
    generate_procedural_motion, split_subsequences, subsample_by_stride, MotionKind, MotionLimits,
};
use humanflow::texture_lab::{hsv_to_rgb, rgb_to_hsv, split_assets, split_counts, Split};
use humanflow::{Aabb, BodyModel, BodyModel32, Bvh, MotionSequence, PoseFrame, ShapeVector, Vec3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coarse() -> BodyModel {
    BodyModel::desk(&DeskModelOptions::coarse(false))
}

fn v3() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn tri() -> impl Strategy<Value = [Vec3; 3]> {
    [v3(), v3(), v3()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn triangle_test_is_symmetric(a in tri(), b in tri()) {
        prop_assert_eq!(triangles_intersect(&a, &b), triangles_intersect(&b, &a));
        if triangles_intersect(&a, &b) {
            prop_assert!(Aabb::from_triangle(&a).overlaps(&Aabb::from_triangle(&b)));
        }
    }

    #[test]
    fn bvh_query_matches_scan(q in (v3(), 0.05f64..0.6), seed in 0u64..1000) {
        let model = coarse();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stats = GenderStats::standard(model.num_shape_coeffs());
        let shape = sample_shape(&mut rng, &stats, Gender::Female, 2.7).unwrap();
        let verts = model.shape_mesh(&shape).unwrap();
        let bvh = Bvh::build(&verts, &model.faces).unwrap();
        let (c, r) = q;
        let c = Vec3::new(c.x * 0.4, c.y + 0.9, c.z * 0.3);
        let query = Aabb::new(c - Vec3::new(r, r, r), c + Vec3::new(r, r, r));
        let mut got = bvh.query_aabb(&verts, &query);
        got.sort_unstable();
        let want: Vec<u32> = model
            .faces
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                let t = f.map(|i| verts[i as usize]);
                Aabb::from_triangle(&t).overlaps(&query)
            })
            .map(|(i, _)| i as u32)
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn hsv_round_trip(rgb in [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0]) {
        let back = hsv_to_rgb(rgb_to_hsv(rgb));
        for k in 0..3 {
            prop_assert!((back[k] - rgb[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn split_sizes_add_up(n in 3usize..200, a in 0.1f64..1.0, b in 0.1f64..1.0, c in 0.1f64..1.0) {
        let s = a + b + c;
        let ratios = [a / s, b / s, 1.0 - a / s - b / s];
        let counts = split_counts(n, ratios).unwrap();
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
        prop_assert!(counts.iter().all(|&k| k >= 1));
    }
}

#[test]
fn rest_pose_reproduces_template() {
    for model in [coarse(), BodyModel::desk(&DeskModelOptions::coarse(true))] {
        model.validate().unwrap();
        let shape = ShapeVector::zeros(model.num_shape_coeffs(), Gender::Male);
        let posed = model.pose_mesh(&shape, &PoseFrame::rest(model.num_joints())).unwrap();
        let err = posed
            .vertices
            .iter()
            .zip(&model.template_vertices)
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
    assert!(BodyModel::desk(&DeskModelOptions::coarse(true)).has_fingers());
    assert!(!coarse().has_fingers());
}

#[test]
fn single_precision_model_tracks_double() {
    let opts = DeskModelOptions::coarse(false);
    let (m64, m32) = (BodyModel::desk(&opts), BodyModel32::desk(&opts));
    let mut pose = PoseFrame::rest(m64.num_joints());
    pose.joint_rotations[1] = Vec3::new(0.3, -0.2, 0.1);
    pose.root_translation = Vec3::new(0.5, 0.0, 3.0);
    let pose32 = humanflow::body_model::PoseFrame::<f32> {
        root_translation: humanflow::math::Vec3::new(0.5, 0.0, 3.0),
        joint_rotations: pose
            .joint_rotations
            .iter()
            .map(|r| humanflow::math::Vec3::new(r.x as f32, r.y as f32, r.z as f32))
            .collect(),
    };
    let a = m64.pose_mesh(&ShapeVector::zeros(m64.num_shape_coeffs(), Gender::Female), &pose).unwrap();
    let b = m32
        .pose_mesh(&humanflow::body_model::ShapeVector::zeros(m32.num_shape_coeffs(), Gender::Female), &pose32)
        .unwrap();
    for (p, q) in a.vertices.iter().zip(&b.vertices) {
        assert!((p.x - q.x as f64).abs() < 1e-4 && (p.z - q.z as f64).abs() < 1e-4);
    }
}

#[test]
fn model_and_motion_documents_round_trip() {
    let model = coarse();
    let back = BodyModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
    assert!(BodyModel::from_json("{\"schema_version\": 42}").is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seq =
        generate_procedural_motion(&mut rng, &model, MotionKind::Walk, 95, 60.0, &MotionLimits::default()).unwrap();
    let text = seq.to_json(&model).unwrap();
    let back = MotionSequence::from_json(&text, &model).unwrap();
    assert_eq!(back.frames.len(), 95);
    for (a, b) in back.frames.iter().zip(&seq.frames) {
        assert!((a.root_translation - b.root_translation).norm() < 1e-12);
    }
    let fingers = BodyModel::desk(&DeskModelOptions::coarse(true));
    assert!(MotionSequence::from_json(&text, &fingers).is_err());
}

#[test]
fn subsequences_tile_the_source() {
    let model = coarse();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seq = generate_procedural_motion(&mut rng, &model, MotionKind::RandomSmooth, 103, 100.0, &MotionLimits::default())
        .unwrap();
    let half = subsample_by_stride(&seq, 2).unwrap();
    assert_eq!((half.frames.len(), half.fps), (52, 50.0));
    let subs = split_subsequences(&half, 10).unwrap();
    assert_eq!(subs.len(), 5);
    for (i, s) in subs.iter().enumerate() {
        assert_eq!(s.frame_range, [10 * i, 10 * i + 10]);
        assert_eq!(s.frames[..], half.frames[10 * i..10 * i + 10]);
    }
    assert!(split_subsequences(&half, 1).is_err());
}

#[test]
fn translated_copies_collide_only_when_overlapping() {
    let model = coarse();
    let verts = model.template_vertices.clone();
    let bvh = Bvh::build(&verts, &model.faces).unwrap();
    let far: Vec<Vec3> = verts.iter().map(|v| *v + Vec3::new(5.0, 0.0, 0.0)).collect();
    let bvh_far = Bvh::build(&far, &model.faces).unwrap();
    assert!(mesh_pair_collision(&bvh, &verts, &bvh_far, &far).is_empty());
    let near: Vec<Vec3> = verts.iter().map(|v| *v + Vec3::new(0.05, 0.01, 0.0)).collect();
    let bvh_near = Bvh::build(&near, &model.faces).unwrap();
    assert!(!mesh_pair_collision(&bvh, &verts, &bvh_near, &near).is_empty());
}

#[test]
fn asset_splits_are_disjoint_and_seeded() {
    let ids: Vec<String> = (0..40).map(|i| format!("tex-{i:02}")).collect();
    let ratios = [0.8, 0.1, 0.1];
    let a = split_assets(&mut ChaCha8Rng::seed_from_u64(1), &ids, ratios).unwrap();
    let b = split_assets(&mut ChaCha8Rng::seed_from_u64(1), &ids, ratios).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.counts(), [32, 4, 4]);
    for id in &ids {
        let s = a.split_of(id).unwrap();
        assert!(a.get(s).contains(id));
        assert_eq!(Split::ALL.iter().filter(|t| a.get(**t).contains(id)).count(), 1);
    }
    let dup = vec!["x".to_string(), "x".to_string(), "y".to_string()];
    assert!(split_assets(&mut ChaCha8Rng::seed_from_u64(1), &dup, ratios).is_err());
}
