use rayon::prelude::*;

use super::{GBuffer, Hit, SceneGeometry, BACKGROUND};
use crate::body_model::BodyModel;
use crate::error::Result;
use crate::math::Vec3;
use crate::scene::NEAR_PLANE;

/// Rows per parallel work item.
const BAND: usize = 16;

/// Area-weighted vertex normals of a triangle mesh.
pub fn vertex_normals(vertices: &[Vec3<f64>], faces: &[[u32; 3]]) -> Vec<Vec3<f64>> {
    let mut n = vec![Vec3::zero(); vertices.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| vertices[i as usize]);
        let fnorm = (b - a).cross(c - a);
        for &i in f {
            n[i as usize] += fnorm;
        }
    }
    for v in &mut n {
        let len = v.norm();
        *v = if len > 0.0 { *v * (1.0 / len) } else { Vec3::new(0.0, 0.0, 1.0) };
    }
    n
}

/// A projected triangle with positive signed area.
struct ScreenTri {
    actor: u16,
    face: u32,
    p: [[f64; 2]; 3],
    inv_z: [f64; 3],
    /// Original vertex slot of each of `p`.
    slot: [usize; 3],
    area: f64,
    bbox: [f64; 4],
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Top-left fill convention for edge `a -> b` of a positive-area triangle
/// in image coordinates (y down).
#[inline]
fn owns_edge(a: [f64; 2], b: [f64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

#[inline]
fn inside(w: f64, owned: bool) -> bool {
    w > 0.0 || (w == 0.0 && owned)
}

fn setup(geom: &SceneGeometry, model: &BodyModel<f64>, frame: usize) -> Vec<ScreenTri> {
    let cam = &geom.cameras[frame];
    let (w, h) = (cam.intrinsics.width as f64, cam.intrinsics.height as f64);
    let mut tris = Vec::new();
    for (a, actor) in geom.actors.iter().enumerate() {
        let cv: Vec<Vec3<f64>> = actor.vertices[frame].iter().map(|&v| cam.to_camera(v)).collect();
        for (fi, f) in model.faces.iter().enumerate() {
            let c = f.map(|i| cv[i as usize]);
            // no clipping: faces reaching the near plane are dropped
            if c.iter().any(|v| v.z <= NEAR_PLANE) {
                continue;
            }
            let mut p = c.map(|v| cam.project_camera(v));
            let mut inv_z = c.map(|v| 1.0 / v.z);
            let mut slot = [0, 1, 2];
            let mut area = edge(p[0], p[1], p[2]);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            if area < 0.0 {
                p.swap(1, 2);
                inv_z.swap(1, 2);
                slot.swap(1, 2);
                area = -area;
            }
            let bbox = [
                p[0][0].min(p[1][0]).min(p[2][0]),
                p[0][1].min(p[1][1]).min(p[2][1]),
                p[0][0].max(p[1][0]).max(p[2][0]),
                p[0][1].max(p[1][1]).max(p[2][1]),
            ];
            if bbox[2] < 0.0 || bbox[3] < 0.0 || bbox[0] > w || bbox[1] > h {
                continue;
            }
            tris.push(ScreenTri {
                actor: a as u16 + 1,
                face: fi as u32,
                p,
                inv_z,
                slot,
                area,
                bbox,
            });
        }
    }
    tris
}

/// Pixel index range whose centers `i + 0.5` fall in `[lo, hi]`.
#[inline]
fn center_range(lo: f64, hi: f64, n: usize) -> std::ops::Range<usize> {
    let a = (lo - 0.5).ceil().max(0.0);
    let b = ((hi - 0.5).floor() + 1.0).min(n as f64);
    if b <= a {
        0..0
    } else {
        a as usize..b as usize
    }
}

fn fill_band(tris: &[ScreenTri], width: usize, height: usize, y0: usize, band: &mut [Hit]) {
    let y1 = (y0 + band.len() / width).min(height);
    for t in tris {
        let ys = center_range(t.bbox[1], t.bbox[3], height);
        let (ys, ye) = (ys.start.max(y0), ys.end.min(y1));
        if ys >= ye {
            continue;
        }
        let xs = center_range(t.bbox[0], t.bbox[2], width);
        let own = [
            owns_edge(t.p[1], t.p[2]),
            owns_edge(t.p[2], t.p[0]),
            owns_edge(t.p[0], t.p[1]),
        ];
        for y in ys..ye {
            let py = y as f64 + 0.5;
            for x in xs.clone() {
                let q = [x as f64 + 0.5, py];
                let w0 = edge(t.p[1], t.p[2], q);
                let w1 = edge(t.p[2], t.p[0], q);
                let w2 = edge(t.p[0], t.p[1], q);
                if !(inside(w0, own[0]) && inside(w1, own[1]) && inside(w2, own[2])) {
                    continue;
                }
                let l = [w0 / t.area, w1 / t.area, w2 / t.area];
                let qz = [l[0] * t.inv_z[0], l[1] * t.inv_z[1], l[2] * t.inv_z[2]];
                let s = qz[0] + qz[1] + qz[2];
                let depth = 1.0 / s;
                let cell = &mut band[(y - y0) * width + x];
                if depth < cell.depth {
                    let mut bary = [0.0; 3];
                    for k in 0..3 {
                        bary[t.slot[k]] = qz[k] / s;
                    }
                    *cell = Hit {
                        depth,
                        actor: t.actor,
                        face: t.face,
                        bary,
                    };
                }
            }
        }
    }
}

/// Z-buffered fill of every actor triangle (pixel centers, top-left rule,
/// perspective-correct barycentrics), then the billboard behind them.
pub fn rasterize(geom: &SceneGeometry, model: &BodyModel<f64>, frame: usize) -> Result<GBuffer> {
    let cam = &geom.cameras[frame];
    cam.validate()?;
    let (width, height) = (cam.intrinsics.width as usize, cam.intrinsics.height as usize);
    let tris = setup(geom, model, frame);
    let mut hits = vec![Hit::EMPTY; width * height];
    hits.par_chunks_mut(BAND * width)
        .enumerate()
        .for_each(|(b, band)| {
            fill_band(&tris, width, height, b * BAND, band);
            for (i, cell) in band.iter_mut().enumerate() {
                let (x, y) = ((i % width) as f64 + 0.5, (b * BAND + i / width) as f64 + 0.5);
                if let Some((d, _)) = geom.billboard.intersect(cam, x, y) {
                    if d < cell.depth {
                        *cell = Hit {
                            depth: d,
                            actor: BACKGROUND,
                            ..Hit::EMPTY
                        };
                    }
                }
            }
        });
    Ok(GBuffer {
        width: width as u32,
        height: height as u32,
        hits,
    })
}
