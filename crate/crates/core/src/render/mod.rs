//! Software rasterizer producing shaded RGB, forward flow and part
//! segmentation from one shared visibility buffer per frame.

mod check;
mod post;
mod raster;

use image::{Rgb, RgbImage};
use rayon::prelude::*;

use crate::body_model::BodyModel;
use crate::error::{invalid, Error, Result};
use crate::flow::FlowField;
use crate::math::Vec3;
use crate::scene::{pose_actor_frames, Camera, SceneSpec, ShLighting, NEAR_PLANE};
use crate::texture_lab::{match_hand_texture, replace_hand_region, Texture, TextureLibrary};

pub use check::{brightness_constancy, ConstancyOptions, ConstancyReport};
pub use post::{apply_gaussian_blur, apply_motion_blur, gaussian_kernel, MOTION_BLUR_STEPS};
pub use raster::{rasterize, vertex_normals};

/// Actor id of billboard pixels.
pub const BACKGROUND: u16 = 0;
/// Actor id of pixels that hit nothing.
pub const NO_HIT: u16 = u16::MAX;
/// Face id stored for non-actor pixels.
pub const NO_FACE: u32 = u32::MAX;

/// Unit-scale linear RGB, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 3]>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 3]; width as usize * height as usize],
        }
    }

    pub fn filled(width: u32, height: u32, c: [f32; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![c; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f32; 3] {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Bilinear lookup at continuous pixel coordinates (pixel `i` is centered
    /// at `i + 0.5`), clamped at the borders.
    pub fn sample(&self, x: f64, y: f64) -> [f32; 3] {
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (ax, ay) = ((fx - x0 as f64) as f32, (fy - y0 as f64) as f32);
        let (a, b, c, d) = (self.get(x0, y0), self.get(x1, y0), self.get(x0, y1), self.get(x1, y1));
        std::array::from_fn(|k| (a[k] * (1.0 - ax) + b[k] * ax) * (1.0 - ay) + (c[k] * (1.0 - ax) + d[k] * ax) * ay)
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let mut img = RgbImage::new(self.width, self.height);
        for (p, c) in img.pixels_mut().zip(&self.data) {
            *p = Rgb(c.map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
        }
        img
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.pixels().map(|p| p.0.map(|c| c as f32 / 255.0)).collect(),
        }
    }
}

/// Per-pixel `(actor id, part id)`; actor ids are 1-based, 0 is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[u16; 2]>,
}

impl SegMask {
    /// PNG encoding: red = actor id, green = part id, blue = 0.
    pub fn to_png_image(&self) -> Result<RgbImage> {
        let mut img = RgbImage::new(self.width, self.height);
        for (p, &[a, part]) in img.pixels_mut().zip(&self.data) {
            if a > 255 || part > 255 {
                return invalid(format!("label ({a}, {part}) does not fit the 8-bit mask encoding"));
            }
            *p = Rgb([a as u8, part as u8, 0]);
        }
        Ok(img)
    }

    pub fn from_png_image(img: &RgbImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.pixels().map(|p| [p.0[0] as u16, p.0[1] as u16]).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Camera-space depth (m); infinite for [`NO_HIT`].
    pub depth: f64,
    pub actor: u16,
    pub face: u32,
    /// Perspective-correct barycentrics of the hit on `face`.
    pub bary: [f64; 3],
}

impl Hit {
    pub const EMPTY: Hit = Hit {
        depth: f64::INFINITY,
        actor: NO_HIT,
        face: NO_FACE,
        bary: [1.0, 0.0, 0.0],
    };

    #[inline]
    pub fn is_actor(&self) -> bool {
        self.actor != BACKGROUND && self.actor != NO_HIT
    }
}

/// Visibility buffer: the single source for every pass of a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct GBuffer {
    pub width: u32,
    pub height: u32,
    pub hits: Vec<Hit>,
}

impl GBuffer {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> &Hit {
        &self.hits[y as usize * self.width as usize + x as usize]
    }
}

/// Textured background plane at constant world z, unaffected by lighting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Billboard {
    pub z: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Billboard {
    /// Plane `depth` meters ahead of `camera`, sized to 1.25x its frustum.
    pub fn facing(camera: &Camera, depth: f64) -> Self {
        let c = camera.center();
        let k = &camera.intrinsics;
        let hw = 1.25 * depth * (k.width as f64 / 2.0) / k.focal;
        let hh = 1.25 * depth * (k.height as f64 / 2.0) / k.focal;
        Self {
            z: c.z + depth,
            x_min: c.x - hw,
            x_max: c.x + hw,
            y_min: c.y - hh,
            y_max: c.y + hh,
        }
    }

    pub fn from_spec(spec: &SceneSpec) -> Self {
        Self::facing(&spec.camera, spec.background.depth)
    }

    /// Camera depth and world point where the ray through pixel coordinates
    /// `(u, v)` meets the plane, if inside its extents.
    pub fn intersect(&self, camera: &Camera, u: f64, v: f64) -> Option<(f64, Vec3<f64>)> {
        let (o, d) = camera.ray(u, v);
        if d.z <= 1e-12 {
            return None;
        }
        let s = (self.z - o.z) / d.z;
        if s <= NEAR_PLANE {
            return None;
        }
        let p = o + d * s;
        let inside = p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max;
        inside.then_some((s, p))
    }

    /// Texture coordinates of a point on the plane; u grows to image right.
    pub fn uv(&self, p: Vec3<f64>) -> (f64, f64) {
        (
            (self.x_max - p.x) / (self.x_max - self.x_min),
            (self.y_max - p.y) / (self.y_max - self.y_min),
        )
    }
}

/// World-space geometry of every frame.
#[derive(Clone, Debug)]
pub struct SceneGeometry {
    pub cameras: Vec<Camera>,
    pub billboard: Billboard,
    /// `actors[a].vertices[f]`: actor `a` (id `a + 1`) at frame `f`.
    pub actors: Vec<ActorGeometry>,
}

#[derive(Clone, Debug)]
pub struct ActorGeometry {
    pub vertices: Vec<Vec<Vec3<f64>>>,
    pub normals: Vec<Vec<Vec3<f64>>>,
}

impl SceneGeometry {
    pub fn new(spec: &SceneSpec, model: &BodyModel<f64>) -> Result<Self> {
        spec.camera.validate()?;
        let cameras: Vec<Camera> = (0..spec.n_frames).map(|f| spec.camera_at(f)).collect();
        for c in &cameras {
            c.validate()?;
        }
        let actors = spec
            .actors
            .par_iter()
            .map(|a| {
                let vertices = pose_actor_frames(model, a)?;
                let normals = vertices.iter().map(|v| vertex_normals(v, &model.faces)).collect();
                Ok(ActorGeometry { vertices, normals })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cameras,
            billboard: Billboard::from_spec(spec),
            actors,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.cameras.len()
    }

    /// World point of an actor hit at `frame` (the hit's barycentrics on its
    /// face, evaluated on that frame's mesh).
    pub fn surface_point(&self, faces: &[[u32; 3]], hit: &Hit, frame: usize) -> Vec3<f64> {
        let v = &self.actors[hit.actor as usize - 1].vertices[frame];
        let f = faces[hit.face as usize];
        v[f[0] as usize] * hit.bary[0] + v[f[1] as usize] * hit.bary[1] + v[f[2] as usize] * hit.bary[2]
    }

    /// Interpolated unit normal of an actor hit at `frame` in world space.
    pub fn surface_normal(&self, faces: &[[u32; 3]], hit: &Hit, frame: usize) -> Vec3<f64> {
        let n = &self.actors[hit.actor as usize - 1].normals[frame];
        let f = faces[hit.face as usize];
        (n[f[0] as usize] * hit.bary[0] + n[f[1] as usize] * hit.bary[1] + n[f[2] as usize] * hit.bary[2])
            .normalized()
    }
}

/// Albedo textures of a scene, hand regions already replaced.
#[derive(Clone, Debug)]
pub struct SceneTextures {
    pub actors: Vec<Texture>,
    pub background: Texture,
}

impl SceneTextures {
    pub fn load(spec: &SceneSpec, model: &BodyModel<f64>) -> Result<Self> {
        let library = spec.assets.library(TextureLibrary::default())?;
        Self::from_library(spec, model, &library)
    }

    pub fn from_library(spec: &SceneSpec, model: &BodyModel<f64>, library: &TextureLibrary) -> Result<Self> {
        let actors = spec
            .actors
            .iter()
            .map(|a| {
                let body = library.load(&a.texture_id, model)?;
                match &a.hand_texture_id {
                    Some(h) => {
                        let hand = library.load(h, model)?;
                        let m = match_hand_texture(&body, std::slice::from_ref(&hand))?;
                        Ok(replace_hand_region(&body, &m.texture, model))
                    }
                    None => Ok(body),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let background = library.load(&spec.background.texture_id, model)?;
        Ok(Self { actors, background })
    }
}

/// Shades a frame from its visibility buffer: SH-lit albedo on actors,
/// unlit texture on the billboard, black where nothing is hit.
pub fn shade_frame(
    geom: &SceneGeometry,
    model: &BodyModel<f64>,
    frame: usize,
    gbuf: &GBuffer,
    textures: &SceneTextures,
    lighting: &ShLighting,
) -> ColorImage {
    let cam = &geom.cameras[frame];
    let rot = cam.extrinsics.rotation;
    let w = gbuf.width as usize;
    let data = gbuf
        .hits
        .par_iter()
        .enumerate()
        .map(|(i, hit)| {
            let c = match hit.actor {
                NO_HIT => [0.0; 3],
                BACKGROUND => {
                    let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
                    match geom.billboard.intersect(cam, x, y) {
                        Some((_, p)) => {
                            let (u, v) = geom.billboard.uv(p);
                            textures.background.sample(u, v)
                        }
                        None => [0.0; 3],
                    }
                }
                a => {
                    let f = model.faces[hit.face as usize];
                    let uv = (0..3).fold([0.0; 2], |acc, k| {
                        let t = model.uv_coords[f[k] as usize];
                        [acc[0] + t[0] * hit.bary[k], acc[1] + t[1] * hit.bary[k]]
                    });
                    let albedo = textures.actors[a as usize - 1].sample(uv[0], uv[1]);
                    let n = rot.mul_vec(geom.surface_normal(&model.faces, hit, frame));
                    lighting.shade(n, albedo)
                }
            };
            c.map(|v| v as f32)
        })
        .collect();
    ColorImage {
        width: gbuf.width,
        height: gbuf.height,
        data,
    }
}

/// Forward flow `t -> t + 1`: the surface point visible at `t` is carried to
/// `t + 1` on the same face with the same barycentrics, then both are
/// projected. Billboard pixels keep their plane point under the next camera.
pub fn render_flow(geom: &SceneGeometry, model: &BodyModel<f64>, frame: usize, gbuf: &GBuffer) -> Result<FlowField> {
    if frame + 1 >= geom.n_frames() {
        return invalid(format!("flow of frame {frame} needs frame {}", frame + 1));
    }
    let (c0, c1) = (&geom.cameras[frame], &geom.cameras[frame + 1]);
    let w = gbuf.width as usize;
    let data = gbuf
        .hits
        .par_iter()
        .enumerate()
        .map(|(i, hit)| {
            let (p0, p1) = match hit.actor {
                NO_HIT => return [0.0; 2],
                BACKGROUND => {
                    let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
                    match geom.billboard.intersect(c0, x, y) {
                        Some((_, p)) => (p, p),
                        None => return [0.0; 2],
                    }
                }
                _ => (
                    geom.surface_point(&model.faces, hit, frame),
                    geom.surface_point(&model.faces, hit, frame + 1),
                ),
            };
            let a = c0.project_camera(c0.to_camera(p0));
            let q = c1.to_camera(p1);
            if q.z <= NEAR_PLANE {
                return [0.0; 2];
            }
            let b = c1.project_camera(q);
            [(b[0] - a[0]) as f32, (b[1] - a[1]) as f32]
        })
        .collect();
    FlowField::from_data(gbuf.width, gbuf.height, data)
}

pub fn render_segmentation(model: &BodyModel<f64>, gbuf: &GBuffer) -> SegMask {
    let data = gbuf
        .hits
        .iter()
        .map(|h| {
            if h.is_actor() {
                [h.actor, model.part_of_face[h.face as usize]]
            } else {
                [0, 0]
            }
        })
        .collect();
    SegMask {
        width: gbuf.width,
        height: gbuf.height,
        data,
    }
}

/// All passes of a subsequence.
#[derive(Clone, Debug)]
pub struct RenderedScene {
    pub gbuffers: Vec<GBuffer>,
    /// Shaded frames before any blur.
    pub clean: Vec<ColorImage>,
    /// Final frames after motion and Gaussian blur.
    pub rgb: Vec<ColorImage>,
    /// `flow[t]` maps frame `t` to `t + 1`.
    pub flow: Vec<FlowField>,
    pub seg: Vec<SegMask>,
}

/// Renders every pass of every frame. Frames render in parallel; the output
/// does not depend on the thread count.
pub fn render_scene(
    spec: &SceneSpec,
    model: &BodyModel<f64>,
    textures: &SceneTextures,
) -> Result<(SceneGeometry, RenderedScene)> {
    spec.validate()?;
    if textures.actors.len() != spec.actors.len() {
        return Err(Error::Internal("texture count does not match actor count".into()));
    }
    let geom = SceneGeometry::new(spec, model)?;
    let n = spec.n_frames;
    let gbuffers = (0..n)
        .into_par_iter()
        .map(|f| rasterize(&geom, model, f))
        .collect::<Result<Vec<_>>>()?;
    let clean: Vec<ColorImage> = (0..n)
        .into_par_iter()
        .map(|f| shade_frame(&geom, model, f, &gbuffers[f], textures, &spec.lighting))
        .collect();
    let flow = (0..n - 1)
        .into_par_iter()
        .map(|f| render_flow(&geom, model, f, &gbuffers[f]))
        .collect::<Result<Vec<_>>>()?;
    let seg = gbuffers.iter().map(|g| render_segmentation(model, g)).collect();
    let rgb = (0..n)
        .into_par_iter()
        .map(|f| {
            let mut img = if spec.degrade.motion_blur && f + 1 < n {
                apply_motion_blur(&clean[f], &clean[f + 1], &flow[f])?
            } else {
                clean[f].clone()
            };
            if let Some(sigma) = spec.degrade.gaussian_blur_sigma {
                img = apply_gaussian_blur(&img, sigma)?;
            }
            Ok(img)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        geom,
        RenderedScene {
            gbuffers,
            clean,
            rgb,
            flow,
            seg,
        },
    ))
}
