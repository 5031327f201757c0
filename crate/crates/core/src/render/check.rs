//! Brightness-constancy validation of rendered flow.

use super::{ColorImage, GBuffer, Hit, SceneGeometry, BACKGROUND, NO_HIT};
use crate::body_model::BodyModel;
use crate::error::{invalid, Result};
use crate::flow::FlowField;
use crate::scene::ShLighting;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstancyOptions {
    /// Absolute depth slack (m) of the occlusion test.
    pub depth_abs: f64,
    /// Relative depth slack of the occlusion test.
    pub depth_rel: f64,
    /// Largest per-channel change of the lighting factor `E` between the two
    /// frames for a pixel to count as consistently shaded.
    pub max_shading_change: f64,
    /// Pixels whose target lands closer than this to the border are skipped.
    pub border: f64,
}

impl Default for ConstancyOptions {
    fn default() -> Self {
        Self {
            depth_abs: 0.03,
            depth_rel: 0.01,
            max_shading_change: 0.01,
            border: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstancyReport {
    /// Pixels that passed every validity test.
    pub valid: usize,
    pub total: usize,
    /// Mean absolute RGB difference over valid pixels and channels.
    pub mean_abs_error: f64,
}

/// Warps frame `t + 1` back by the flow of frame `t` and compares with frame
/// `t` on pixels that stay visible: the four bilinear neighbours of the
/// target hit the same actor (or the billboard), their depth agrees with the
/// carried point's depth, and the lighting factor barely changes.
#[allow(clippy::too_many_arguments)]
pub fn brightness_constancy(
    geom: &SceneGeometry,
    model: &BodyModel<f64>,
    lighting: &ShLighting,
    frame: usize,
    gbuffers: &[GBuffer],
    clean: &[ColorImage],
    flow: &FlowField,
    opts: &ConstancyOptions,
) -> Result<ConstancyReport> {
    if frame + 1 >= geom.n_frames() || frame + 1 >= gbuffers.len() || frame + 1 >= clean.len() {
        return invalid(format!("frame {frame} has no successor"));
    }
    let (g0, g1) = (&gbuffers[frame], &gbuffers[frame + 1]);
    let (i0, i1) = (&clean[frame], &clean[frame + 1]);
    let (c0, c1) = (&geom.cameras[frame], &geom.cameras[frame + 1]);
    let (w, h) = (g0.width, g0.height);
    let (mut sum, mut valid) = (0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            let hit = g0.get(x, y);
            if hit.actor == NO_HIT {
                continue;
            }
            let f = flow.get(x, y);
            let (qx, qy) = (x as f64 + 0.5 + f[0] as f64, y as f64 + 0.5 + f[1] as f64);
            let b = opts.border;
            if qx < b || qy < b || qx > w as f64 - b || qy > h as f64 - b {
                continue;
            }
            let expect_depth = if hit.actor == BACKGROUND {
                let Some((_, p)) = geom.billboard.intersect(c0, x as f64 + 0.5, y as f64 + 0.5) else {
                    continue;
                };
                c1.to_camera(p).z
            } else {
                c1.to_camera(geom.surface_point(&model.faces, hit, frame + 1)).z
            };
            let (x0, y0) = ((qx - 0.5).floor() as u32, (qy - 0.5).floor() as u32);
            let neighbours = [(x0, y0), (x0 + 1, y0), (x0, y0 + 1), (x0 + 1, y0 + 1)];
            let tol = opts.depth_abs.max(opts.depth_rel * expect_depth);
            let consistent = neighbours.iter().all(|&(nx, ny)| {
                let n: &Hit = g1.get(nx.min(w - 1), ny.min(h - 1));
                n.actor == hit.actor && (n.depth - expect_depth).abs() <= tol
            });
            if !consistent {
                continue;
            }
            if hit.actor != BACKGROUND {
                let e0 = lighting.irradiance(c0.extrinsics.rotation.mul_vec(geom.surface_normal(&model.faces, hit, frame)));
                let e1 =
                    lighting.irradiance(c1.extrinsics.rotation.mul_vec(geom.surface_normal(&model.faces, hit, frame + 1)));
                if (0..3).any(|k| (e0[k] - e1[k]).abs() > opts.max_shading_change) {
                    continue;
                }
            }
            let a = i0.get(x, y);
            let bb = i1.sample(qx, qy);
            sum += (0..3).map(|k| (a[k] - bb[k]).abs() as f64).sum::<f64>() / 3.0;
            valid += 1;
        }
    }
    Ok(ConstancyReport {
        valid,
        total: (w * h) as usize,
        mean_abs_error: if valid == 0 { f64::NAN } else { sum / valid as f64 },
    })
}
