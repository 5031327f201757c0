//! Procedural textures keyed by id strings.
//!
//! Ids look like `proc:body:clothed:female:3`, `proc:hand:7` or `proc:bg:12`;
//! the generator seed is derived from the id, so a texture can be rebuilt
//! from its id alone. Body and hand textures are painted per part on the
//! model's UV layout.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{hsv_to_rgb, Rect, Texture, TextureKind};
use crate::body_model::{BodyModel, Gender};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Body texture collections: minimal scan-style outfits and varied clothing.
pub const BODY_COLLECTIONS: [&str; 2] = ["scan", "clothed"];

pub(crate) const BODY_TEXTURE_SIZE: u32 = 256;
pub(crate) const BACKGROUND_SIZE: (u32, u32) = (256, 256);

fn seed_of(id: &str) -> u64 {
    let d = Sha256::digest(id.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// UV bounding box `[u0, v0, u1, v1]` of every part, indexed by part id.
pub fn part_uv_bounds<T: Real>(model: &BodyModel<T>) -> Vec<Option<[f64; 4]>> {
    let n = model.parts.iter().map(|p| p.id as usize + 1).max().unwrap_or(0);
    let mut out: Vec<Option<[f64; 4]>> = vec![None; n];
    for (f, &part) in model.faces.iter().zip(&model.part_of_face) {
        for &v in f {
            let [u, w] = model.uv_coords[v as usize].map(|c| c.as_f64());
            let b = out[part as usize].get_or_insert([u, w, u, w]);
            *b = [b[0].min(u), b[1].min(w), b[2].max(u), b[3].max(w)];
        }
    }
    out
}

/// Parts replaced by hand textures: wrists (palms), hands and fingers.
pub fn hand_part_ids<T: Real>(model: &BodyModel<T>) -> Vec<u16> {
    let fingers: Vec<&str> = model.finger_joints.iter().map(|&j| model.joint_names[j].as_str()).collect();
    model
        .parts
        .iter()
        .filter(|p| p.name.ends_with("_wrist") || p.name.ends_with("_hand") || fingers.contains(&p.name.as_str()))
        .map(|p| p.id)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Zone {
    Hips,
    Thigh,
    Shin,
    Foot,
    Torso,
    Neck,
    Head,
    UpperArm,
    Forearm,
    Hand,
}

fn zone_of(name: &str, is_finger: bool) -> Zone {
    if is_finger {
        return Zone::Hand;
    }
    let base = name.strip_prefix("L_").or_else(|| name.strip_prefix("R_")).unwrap_or(name);
    match base {
        "pelvis" => Zone::Hips,
        "hip" => Zone::Thigh,
        "knee" => Zone::Shin,
        "ankle" | "foot" => Zone::Foot,
        "spine1" | "spine2" | "spine3" | "collar" => Zone::Torso,
        "neck" => Zone::Neck,
        "head" => Zone::Head,
        "shoulder" => Zone::UpperArm,
        "elbow" => Zone::Forearm,
        "wrist" | "hand" => Zone::Hand,
        _ => Zone::Torso,
    }
}

/// Bilinear value noise in `[-1, 1]` on a coarse lattice.
struct ValueNoise {
    cell: f64,
    cols: usize,
    grid: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, w: u32, h: u32, cell: f64) -> Self {
        let cols = (w as f64 / cell).ceil() as usize + 2;
        let rows = (h as f64 / cell).ceil() as usize + 2;
        let grid = (0..cols * rows).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { cell, cols, grid }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.cell, y / self.cell);
        let (i, j) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (gx - gx.floor(), gy - gy.floor());
        let g = |a: usize, b: usize| self.grid[b * self.cols + a];
        let top = g(i, j) * (1.0 - fx) + g(i + 1, j) * fx;
        let bot = g(i, j + 1) * (1.0 - fx) + g(i + 1, j + 1) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

fn to_pixel(hsv: [f64; 3]) -> Rgb<u8> {
    Rgb(hsv_to_rgb(hsv).map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8))
}

fn skin_tone(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.random_range(12.0..34.0),
        rng.random_range(0.25..0.6),
        rng.random_range(0.4..0.95),
    ]
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.random_range(0.0..360.0),
        rng.random_range(0.1..0.8),
        rng.random_range(0.2..0.9),
    ]
}

/// Pixel rectangle covering a UV box.
fn uv_rect(b: [f64; 4], w: u32, h: u32) -> (u32, u32, u32, u32) {
    let x0 = (b[0] * w as f64).floor().max(0.0) as u32;
    let y0 = (b[1] * h as f64).floor().max(0.0) as u32;
    let x1 = ((b[2] * w as f64).ceil() as u32).clamp(x0 + 1, w);
    let y1 = ((b[3] * h as f64).ceil() as u32).clamp(y0 + 1, h);
    (x0, y0, x1, y1)
}

/// Central sub-rectangle given as fractions of a part's pixel box.
fn sub_rect((x0, y0, x1, y1): (u32, u32, u32, u32), fx: (f64, f64), fy: (f64, f64)) -> Rect {
    let (w, h) = ((x1 - x0) as f64, (y1 - y0) as f64);
    let ax = x0 + (w * fx.0) as u32;
    let ay = y0 + (h * fy.0) as u32;
    let bx = (x0 + (w * fx.1).ceil() as u32).max(ax + 1).min(x1);
    let by = (y0 + (h * fy.1).ceil() as u32).max(ay + 1).min(y1);
    Rect {
        x: ax,
        y: ay,
        width: bx - ax,
        height: by - ay,
    }
}

pub fn body_texture<T: Real>(id: &str, model: &BodyModel<T>, gender: Gender, collection: &str, size: u32) -> Result<Texture> {
    if !BODY_COLLECTIONS.contains(&collection) {
        return invalid(format!("unknown body texture collection {collection:?}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(id));
    let skin = skin_tone(&mut rng);
    let hair = [rng.random_range(15.0..40.0), rng.random_range(0.2..0.7), rng.random_range(0.05..0.45)];
    let clothed = collection == "clothed";
    let (shirt, pants) = if clothed {
        (random_color(&mut rng), random_color(&mut rng))
    } else {
        let g = rng.random_range(0.3..0.55);
        ([0.0, 0.0, g * 0.6], [0.0, 0.0, g])
    };
    let shoes = [rng.random_range(0.0..360.0), rng.random_range(0.0..0.4), rng.random_range(0.05..0.3)];
    let long_sleeves = clothed && rng.random_bool(0.5);
    let long_pants = clothed && rng.random_bool(0.6);
    let stripes = clothed && rng.random_bool(0.4);
    let stripe_period = rng.random_range(0.08..0.25);
    let noise = ValueNoise::new(&mut rng, size, size, 6.0);
    let grain = ValueNoise::new(&mut rng, size, size, 2.0);

    let mut img = RgbImage::from_pixel(size, size, to_pixel(skin));
    let bounds = part_uv_bounds(model);
    let mut face = None;
    for part in &model.parts {
        let Some(b) = bounds.get(part.id as usize).copied().flatten() else {
            continue;
        };
        let is_finger = model.finger_joints.iter().any(|&j| model.joint_names[j] == part.name);
        let zone = zone_of(&part.name, is_finger);
        let r = uv_rect(b, size, size);
        if zone == Zone::Head {
            face = Some(sub_rect(r, (0.25, 0.75), (0.2, 0.55)));
        }
        for y in r.1..r.3 {
            let along = (y - r.1) as f64 / (r.3 - r.1) as f64;
            for x in r.0..r.2 {
                let mut c = match zone {
                    Zone::Head if along > 0.72 => hair,
                    Zone::Torso if clothed => shirt,
                    Zone::Torso if gender == Gender::Female && part.name != "spine1" => shirt,
                    Zone::UpperArm if long_sleeves || (clothed && along < 0.5) => shirt,
                    Zone::Forearm if long_sleeves => shirt,
                    Zone::Hips | Zone::Thigh => pants,
                    Zone::Shin if long_pants => pants,
                    Zone::Foot if clothed => shoes,
                    _ => skin,
                };
                if stripes && c == shirt {
                    let phase = (along / stripe_period).fract();
                    if phase < 0.3 {
                        c[2] *= 0.8;
                    }
                }
                let n = 0.04 * noise.at(x as f64, y as f64) + 0.015 * grain.at(x as f64, y as f64);
                c[2] = (c[2] * (1.0 + n)).clamp(0.0, 1.0);
                img.put_pixel(x, y, to_pixel(c));
            }
        }
    }
    let face = face.unwrap_or_else(|| Rect::full(size, size));
    Texture::new(id, TextureKind::Body, Some(gender), collection, img, face)
}

/// Hand-only texture: skin on the hand parts, black elsewhere; the sample
/// region is the middle of the left palm.
pub fn hand_texture<T: Real>(id: &str, model: &BodyModel<T>, size: u32) -> Result<Texture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(id));
    let skin = skin_tone(&mut rng);
    let noise = ValueNoise::new(&mut rng, size, size, 4.0);
    let crease_period = rng.random_range(0.15..0.3);
    let mut img = RgbImage::new(size, size);
    let bounds = part_uv_bounds(model);
    let hands = hand_part_ids(model);
    if hands.is_empty() {
        return invalid("model has no hand parts");
    }
    let palm = model
        .parts
        .iter()
        .find(|p| p.name == "L_wrist")
        .map(|p| p.id)
        .unwrap_or(hands[0]);
    let mut region = None;
    for &part in &hands {
        let Some(b) = bounds.get(part as usize).copied().flatten() else {
            continue;
        };
        let r = uv_rect(b, size, size);
        if part == palm {
            region = Some(sub_rect(r, (0.3, 0.7), (0.3, 0.7)));
        }
        for y in r.1..r.3 {
            let along = (y - r.1) as f64 / (r.3 - r.1) as f64;
            for x in r.0..r.2 {
                let mut c = skin;
                if (along / crease_period).fract() < 0.08 {
                    c[2] *= 0.9;
                }
                c[2] = (c[2] * (1.0 + 0.04 * noise.at(x as f64, y as f64))).clamp(0.0, 1.0);
                img.put_pixel(x, y, to_pixel(c));
            }
        }
    }
    let region = region.unwrap_or_else(|| Rect::full(size, size));
    Texture::new(id, TextureKind::Hand, None, "procedural", img, region)
}

/// Indoor-looking background: vertical gradient, soft blobs and boxes, noise.
pub fn background_texture(id: &str, width: u32, height: u32) -> Result<Texture> {
    if width == 0 || height == 0 {
        return invalid("background size must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(id));
    let top = random_color(&mut rng);
    let bottom = random_color(&mut rng);
    let shapes: Vec<(bool, [f64; 4], [f64; 3])> = (0..rng.random_range(5..12))
        .map(|_| {
            let cx = rng.random_range(0.0..1.0) * width as f64;
            let cy = rng.random_range(0.0..1.0) * height as f64;
            let rx = rng.random_range(0.05..0.3) * width as f64;
            let ry = rng.random_range(0.05..0.3) * height as f64;
            (rng.random_bool(0.5), [cx, cy, rx, ry], random_color(&mut rng))
        })
        .collect();
    let noise = ValueNoise::new(&mut rng, width, height, 8.0);
    let mut img = RgbImage::new(width, height);
    for (x, y, p) in img.enumerate_pixels_mut() {
        let t = y as f64 / height.max(2) as f64;
        let lerp = |a: [f64; 3], b: [f64; 3], t: f64| {
            let rgb_a = hsv_to_rgb(a);
            let rgb_b = hsv_to_rgb(b);
            std::array::from_fn::<f64, 3, _>(|k| rgb_a[k] * (1.0 - t) + rgb_b[k] * t)
        };
        let mut c = lerp(top, bottom, t);
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        for (ellipse, [cx, cy, rx, ry], col) in &shapes {
            let (dx, dy) = ((fx - cx) / rx, (fy - cy) / ry);
            let d = if *ellipse { (dx * dx + dy * dy).sqrt() } else { dx.abs().max(dy.abs()) };
            // soft edge over the outer 15% of the shape
            let a = ((1.0 - d) / 0.15).clamp(0.0, 1.0) * 0.85;
            if a > 0.0 {
                let s = hsv_to_rgb(*col);
                for k in 0..3 {
                    c[k] = c[k] * (1.0 - a) + s[k] * a;
                }
            }
        }
        let n = 1.0 + 0.05 * noise.at(fx, fy);
        p.0 = c.map(|v| ((v * n).clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    Texture::new(id, TextureKind::Background, None, "procedural", img, Rect::full(width, height))
}

/// Rebuilds a texture from a `proc:` id.
pub fn procedural_texture<T: Real>(id: &str, model: &BodyModel<T>) -> Result<Texture> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["proc", "body", collection, gender, n] if n.parse::<u64>().is_ok() => {
            let g = match *gender {
                "female" => Gender::Female,
                "male" => Gender::Male,
                _ => return invalid(format!("bad gender in texture id {id:?}")),
            };
            body_texture(id, model, g, collection, BODY_TEXTURE_SIZE)
        }
        ["proc", "hand", n] if n.parse::<u64>().is_ok() => hand_texture(id, model, BODY_TEXTURE_SIZE),
        ["proc", "bg", n] if n.parse::<u64>().is_ok() => {
            background_texture(id, BACKGROUND_SIZE.0, BACKGROUND_SIZE.1)
        }
        _ => invalid(format!("not a procedural texture id: {id:?}")),
    }
}
