mod common;

use common::*;
use humanflow::body_model::{BodyModel, DeskModelOptions, Part};
use humanflow::flow::FlowField;
use humanflow::math::{Mat3, Rigid, Vec3};
use humanflow::render::*;
use humanflow::scene::{Camera, CameraDelta, CameraNoise, Mode, Placement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn render(spec: &humanflow::scene::SceneSpec, model: &BodyModel<f64>) -> (SceneGeometry, RenderedScene) {
    let tex = SceneTextures::load(spec, model).unwrap();
    render_scene(spec, model, &tex).unwrap()
}

fn desk() -> BodyModel<f64> {
    BodyModel::desk(&DeskModelOptions::standard(false))
}

#[test]
fn empty_scene_hits_billboard_at_its_depth() {
    let spec = empty_scene(64, 80.0, 2, 12.0);
    let (_, out) = render(&spec, &desk());
    for h in &out.gbuffers[0].hits {
        assert_eq!(h.actor, BACKGROUND);
        assert!((h.depth - 12.0).abs() < 1e-9);
    }
    assert!(out.seg[0].data.iter().all(|l| *l == [0, 0]));
    assert!(out.flow[0].data.iter().all(|v| *v == [0.0, 0.0]));
}

/// One-triangle model used to probe the rasterizer directly.
fn triangle_model() -> BodyModel<f64> {
    BodyModel {
        name: "tri".into(),
        joint_names: vec!["root".into()],
        parent: vec![None],
        finger_joints: vec![],
        template_vertices: vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0)],
        faces: vec![[0, 1, 2]],
        shape_basis: vec![],
        joint_regressor: vec![vec![(0, 1.0)]],
        skin_weights: vec![vec![(0, 1.0)]; 3],
        uv_coords: vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]],
        parts: vec![Part { id: 1, name: "tri".into() }],
        part_of_face: vec![7],
        part_adjacency: vec![],
    }
}

fn geometry(cam: Camera, billboard: f64, actors: Vec<Vec<Vec3<f64>>>) -> SceneGeometry {
    SceneGeometry {
        cameras: vec![cam; 2],
        billboard: Billboard::facing(&cam, billboard),
        actors: actors
            .into_iter()
            .map(|v| ActorGeometry {
                vertices: vec![v.clone(), v],
                normals: vec![vec![Vec3::new(0.0, 0.0, -1.0); 3]; 2],
            })
            .collect(),
    }
}

#[test]
fn centre_triangle_has_valid_barycentrics() {
    let model = triangle_model();
    let cam = Camera::looking_forward(intrinsics(33, 40.0), Vec3::new(0.0, 0.5, 0.0));
    let verts = vec![Vec3::new(-1.0, 0.0, 3.0), Vec3::new(1.0, 0.0, 3.0), Vec3::new(0.0, 2.0, 3.0)];
    let geom = geometry(cam, 10.0, vec![verts.clone()]);
    let g = rasterize(&geom, &model, 0).unwrap();
    let h = g.get(16, 16);
    assert_eq!((h.actor, h.face), (1, 0));
    assert!(h.bary.iter().all(|&b| b >= 0.0));
    assert!((h.bary.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    assert!((h.depth - 3.0).abs() < 1e-12);
    // barycentric point reprojects onto the pixel center
    let p = verts[0] * h.bary[0] + verts[1] * h.bary[1] + verts[2] * h.bary[2];
    let uv = cam.project(p).unwrap();
    assert!((uv[0] - 16.5).abs() < 1e-9 && (uv[1] - 16.5).abs() < 1e-9);
    let seg = render_segmentation(&model, &g);
    assert_eq!(seg.data[16 * 33 + 16], [1, 7]);
}

#[test]
fn shared_edges_fill_each_pixel_once() {
    // two triangles splitting a square along its diagonal, pixel centers on
    // the diagonal: the top-left rule must assign each exactly once
    let model = BodyModel {
        template_vertices: vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
        ],
        faces: vec![[0, 1, 2], [0, 2, 3]],
        skin_weights: vec![vec![(0, 1.0)]; 4],
        uv_coords: vec![[0.0, 0.0]; 4],
        part_of_face: vec![1, 2],
        ..triangle_model()
    };
    let cam = Camera::looking_forward(intrinsics(32, 16.0), Vec3::new(0.0, 0.0, 0.0));
    let verts = model.template_vertices.iter().map(|v| *v + Vec3::new(0.0, 0.0, 2.0)).collect();
    let geom = geometry(cam, 10.0, vec![verts]);
    let g = rasterize(&geom, &model, 0).unwrap();
    let hits = g.hits.iter().filter(|h| h.is_actor()).count();
    // the square spans [-8, 8] px around the center: exactly 16 x 16 centers
    assert_eq!(hits, 256);
    let f0 = g.hits.iter().filter(|h| h.is_actor() && h.face == 0).count();
    let f1 = g.hits.iter().filter(|h| h.is_actor() && h.face == 1).count();
    assert_eq!(f0 + f1, 256);
    assert!(f0 > 100 && f1 > 100);
}

/// Möller–Trumbore ray/triangle distance.
fn ray_triangle(o: Vec3<f64>, d: Vec3<f64>, t: [Vec3<f64>; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - t[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let dist = e2.dot(q) * inv;
    (dist > 0.0).then_some(dist)
}

#[test]
fn depth_matches_ray_cast_oracle() {
    let (spec, model) = desk_scene(Mode::Mhof, 160, 21);
    let (geom, out) = render(&spec, &model);
    let cam = geom.cameras[0];
    let k = cam.intrinsics;
    // independent camera-to-world map
    let r_t = cam.extrinsics.rotation.transpose();
    let center = r_t.mul_vec(-cam.extrinsics.translation);
    let g = &out.gbuffers[0];
    let actor_pixels: Vec<usize> = (0..g.hits.len()).filter(|&i| g.hits[i].is_actor()).collect();
    assert!(actor_pixels.len() > 100);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let i = actor_pixels[rng.random_range(0..actor_pixels.len())];
        let (x, y) = ((i % k.width as usize) as f64 + 0.5, (i / k.width as usize) as f64 + 0.5);
        let dir_cam = Vec3::new((x - k.cx) / k.focal, (y - k.cy) / k.focal, 1.0);
        let dir = r_t.mul_vec(dir_cam);
        let mut best = (f64::INFINITY, 0usize);
        for (a, actor) in geom.actors.iter().enumerate() {
            for f in &model.faces {
                let t = f.map(|v| actor.vertices[0][v as usize]);
                if let Some(s) = ray_triangle(center, dir, t) {
                    if s < best.0 {
                        best = (s, a + 1);
                    }
                }
            }
        }
        let h = g.hits[i];
        assert!((h.depth - best.0).abs() < 1e-6, "pixel {i}: {} vs {}", h.depth, best.0);
        assert_eq!(h.actor as usize, best.1);
    }
}

#[test]
fn static_scene_has_zero_flow() {
    let model = desk();
    let mut spec = empty_scene(96, 120.0, 3, 12.0);
    spec.actors.push(rest_actor(&model, 3, Placement { x: 0.0, z: 5.0, yaw: 0.4 }, |_| Vec3::zero()));
    let (_, out) = render(&spec, &model);
    for f in &out.flow {
        assert!(f.data.iter().all(|v| v[0].abs() < 1e-9 && v[1].abs() < 1e-9));
    }
    assert!(out.gbuffers[0].hits.iter().any(|h| h.is_actor()));
}

#[test]
fn lateral_camera_translation_oracle() {
    let (f, d, z) = (800.0, 0.05, 12.0);
    let mut spec = empty_scene(320, f, 2, z);
    spec.camera_noise = Some(CameraNoise {
        deltas: vec![Some(CameraDelta {
            translation: Vec3::new(d, 0.0, 0.0),
            rotation: [0.0; 3],
        })],
    });
    let (_, out) = render(&spec, &desk());
    let expect = f * d / z;
    for v in &out.flow[0].data {
        // camera moves toward world +x, which is image left: content moves right
        assert!((v[0] as f64 - expect).abs() < 0.05, "{v:?}");
        assert!(v[1].abs() < 0.05);
    }
}

#[test]
fn rigid_actor_translation_oracle() {
    let model = desk();
    let mut spec = empty_scene(320, 800.0, 2, 12.0);
    // actor root 5 m ahead, moving 0.1 m toward world -x (image right)
    spec.actors.push(rest_actor(&model, 2, Placement { x: 0.0, z: 5.0, yaw: 0.0 }, |f| {
        Vec3::new(-0.1 * f as f64, 0.0, 0.0)
    }));
    let (_, out) = render(&spec, &model);
    let g = &out.gbuffers[0];
    let mut n = 0;
    for (h, v) in g.hits.iter().zip(&out.flow[0].data) {
        if h.is_actor() {
            let expect = 800.0 * 0.1 / h.depth;
            assert!((v[0] as f64 - expect).abs() < 0.05 && v[1].abs() < 0.05);
            n += 1;
        }
    }
    assert!(n > 1000);
    let centre = out.flow[0].get(160, 160);
    assert!((centre[0] - 16.0).abs() < 0.6);
}

#[test]
fn segmentation_agrees_with_gbuffer() {
    let (spec, model) = desk_scene(Mode::Mhof, 128, 8);
    let (_, out) = render(&spec, &model);
    for (g, s) in out.gbuffers.iter().zip(&out.seg) {
        for (h, l) in g.hits.iter().zip(&s.data) {
            if h.is_actor() {
                assert_eq!(*l, [h.actor, model.part_of_face[h.face as usize]]);
            } else {
                assert_eq!(*l, [0, 0]);
            }
            assert_eq!(l[0] == 0, l[1] == 0);
        }
    }
}

#[test]
fn centred_actor_shows_torso() {
    let model = desk();
    let mut spec = empty_scene(128, 160.0, 2, 12.0);
    spec.actors.push(rest_actor(&model, 2, Placement { x: 0.0, z: 4.0, yaw: 0.0 }, |_| Vec3::zero()));
    let (_, out) = render(&spec, &model);
    let [a, part] = out.seg[0].data[64 * 128 + 64];
    assert_eq!(a, 1);
    let name = &model.parts.iter().find(|p| p.id == part).unwrap().name;
    assert!(["pelvis", "spine1", "spine2", "spine3"].contains(&name.as_str()), "{name}");
}

#[test]
fn rendering_is_deterministic() {
    let (spec, model) = desk_scene(Mode::Mhof, 96, 2);
    let (_, a) = render(&spec, &model);
    let (_, b) = render(&spec, &model);
    assert_eq!(a.rgb, b.rgb);
    assert_eq!(a.flow, b.flow);
    assert_eq!(a.seg, b.seg);
}

#[test]
fn brightness_constancy_on_desk_scenes() {
    for seed in [3, 14] {
        let (mut spec, model) = desk_scene(Mode::Mhof, 160, seed);
        spec.degrade.motion_blur = false;
        spec.degrade.gaussian_blur_sigma = None;
        let (geom, out) = render(&spec, &model);
        for t in 0..spec.n_frames - 1 {
            let r = brightness_constancy(
                &geom,
                &model,
                &spec.lighting,
                t,
                &out.gbuffers,
                &out.clean,
                &out.flow[t],
                &ConstancyOptions::default(),
            )
            .unwrap();
            assert!(r.valid > r.total / 4, "{r:?}");
            assert!(r.mean_abs_error < 0.02, "{r:?}");
        }
    }
}

fn image(w: u32, h: u32, mut f: impl FnMut(u32, u32) -> [f32; 3]) -> ColorImage {
    ColorImage {
        width: w,
        height: h,
        data: (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect(),
    }
}

#[test]
fn motion_blur_smears_edge_over_flow_length() {
    // frame t+1 is frame t moved by the flow
    let edge = |shift: f64| move |x: u32, _| if (x as f64 + 0.5) < 20.0 + shift { [1.0f32; 3] } else { [0.0; 3] };
    let a = image(48, 4, edge(0.0));
    let b = image(48, 4, edge(10.0));
    let flow = FlowField::from_data(48, 4, vec![[10.0, 0.0]; 48 * 4]).unwrap();
    let out = apply_motion_blur(&a, &b, &flow).unwrap();
    let row: Vec<f32> = (0..48).map(|x| out.get(x, 1)[0]).collect();
    let ramp: Vec<usize> = (0..48).filter(|&x| row[x] > 1e-6 && row[x] < 1.0 - 1e-6).collect();
    assert!(row.windows(2).all(|w| w[1] >= w[0] - 1e-6) || row.windows(2).all(|w| w[1] <= w[0] + 1e-6));
    assert_eq!(ramp.len(), 10, "{row:?}");
    assert!(row[..20].iter().all(|&v| (v - 1.0).abs() < 1e-6));
    assert!(row[31..].iter().all(|&v| v.abs() < 1e-6));
}

#[test]
fn motion_blur_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = image(32, 32, |_, _| [rng.random::<f32>(), 0.5, 0.1]);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let b = image(32, 32, |_, _| [rng.random::<f32>(), 0.2, 0.9]);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let flow = FlowField::from_data(
        32,
        32,
        (0..1024).map(|_| [rng.random_range(-4.0..4.0f32), rng.random_range(-4.0..4.0f32)]).collect(),
    )
    .unwrap();
    let out = apply_motion_blur(&a, &b, &flow).unwrap();
    for y in 0..32u32 {
        for x in 0..32u32 {
            let f = flow.get(x, y);
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut acc = [0.0f64; 3];
            for s in 0..64 {
                let al = s as f64 / 63.0;
                let p = a.sample(px - al * f[0] as f64, py - al * f[1] as f64);
                let q = b.sample(px + (1.0 - al) * f[0] as f64, py + (1.0 - al) * f[1] as f64);
                for k in 0..3 {
                    acc[k] += (1.0 - al) * p[k] as f64 + al * q[k] as f64;
                }
            }
            let direct = acc.map(|c| (c / 64.0) as f32);
            assert_eq!(out.get(x, y), direct);
        }
    }
}

#[test]
fn gaussian_impulse_moments() {
    let n = 31u32;
    let mut img = ColorImage::new(n, n);
    img.data[(15 * n + 15) as usize] = [1.0; 3];
    let out = apply_gaussian_blur(&img, 1.0).unwrap();
    let (mut m0, mut mx2) = (0.0, 0.0);
    for y in 0..n {
        for x in 0..n {
            let v = out.get(x, y)[0] as f64;
            m0 += v;
            mx2 += v * (x as f64 - 15.0).powi(2);
        }
    }
    let sigma = (mx2 / m0).sqrt();
    assert!((m0 - 1.0).abs() < 1e-5);
    assert!((sigma - 1.0).abs() < 0.02, "{sigma}");
}

#[test]
fn gaussian_separable_equals_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = image(16, 16, |_, _| [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]);
    let sigma = 1.3;
    let out = apply_gaussian_blur(&img, sigma).unwrap();
    let r = (3.0 * sigma).ceil() as i64;
    let g: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = g.iter().sum();
    for y in 0..16i64 {
        for x in 0..16i64 {
            let mut acc = [0.0f64; 3];
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = g[(dy + r) as usize] * g[(dx + r) as usize] / (norm * norm);
                    let c = img.get((x + dx).clamp(0, 15) as u32, (y + dy).clamp(0, 15) as u32);
                    for k in 0..3 {
                        acc[k] += w * c[k] as f64;
                    }
                }
            }
            let o = out.get(x as u32, y as u32);
            for k in 0..3 {
                assert!((o[k] as f64 - acc[k]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn gaussian_preserves_mean_away_from_borders() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let img = image(64, 64, |_, _| [rng.random::<f32>(); 3]);
    let out = apply_gaussian_blur(&img, 1.0).unwrap();
    let mean = |im: &ColorImage| {
        let mut s = 0.0;
        for y in 8..56 {
            for x in 8..56 {
                s += im.get(x, y)[0] as f64;
            }
        }
        s / (48.0 * 48.0)
    };
    assert!((mean(&img) - mean(&out)).abs() < 1.0 / 255.0);
}

#[test]
fn degenerate_camera_rejected() {
    let mut spec = empty_scene(64, 80.0, 2, 12.0);
    spec.camera.extrinsics = Rigid::new(Mat3::from_rows([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), Vec3::zero());
    let model = desk();
    let tex = SceneTextures::load(&empty_scene(64, 80.0, 2, 12.0), &model).unwrap();
    assert!(matches!(
        render_scene(&spec, &model, &tex),
        Err(humanflow::Error::InvalidArgument(_))
    ));
}
