//! Textures: HSV conversion, hand-texture matching, dataset splits and the
//! procedural generators used when no texture directories are supplied.
//!
//! UV coordinates map to pixels with `x = u * width`, `y = v * height`
//! (v grows downward, like image rows).

mod library;
mod procedural;

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body_model::{BodyModel, Gender};
use crate::error::{invalid, Result};
use crate::scalar::Real;

pub use library::{TextureEntry, TextureLibrary, TextureManifest, PROCEDURAL_PREFIX};
pub use procedural::{
    background_texture, body_texture, hand_part_ids, hand_texture, part_uv_bounds, procedural_texture,
    BODY_COLLECTIONS,
};

/// Hexcone RGB to HSV. Hue in degrees `[0, 360)`, saturation and value in
/// `[0, 1]`. Inputs are clamped to `[0, 1]`; achromatic colors get hue 0.
pub fn rgb_to_hsv<T: Real>(rgb: [T; 3]) -> [T; 3] {
    let [r, g, b] = rgb.map(|c| c.max(T::zero()).min(T::one()));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let c = max - min;
    let s = if max > T::zero() { c / max } else { T::zero() };
    if c <= T::zero() {
        return [T::zero(), s, max];
    }
    let sixty = T::lit(60.0);
    let mut h = if max == r {
        sixty * ((g - b) / c)
    } else if max == g {
        sixty * ((b - r) / c + T::lit(2.0))
    } else {
        sixty * ((r - g) / c + T::lit(4.0))
    };
    if h < T::zero() {
        h += T::lit(360.0);
    }
    if h >= T::lit(360.0) {
        h -= T::lit(360.0);
    }
    [h, s, max]
}

/// Inverse of [`rgb_to_hsv`]; hue wraps, saturation and value are clamped.
pub fn hsv_to_rgb<T: Real>(hsv: [T; 3]) -> [T; 3] {
    let h = wrap_degrees(hsv[0]);
    let s = hsv[1].max(T::zero()).min(T::one());
    let v = hsv[2].max(T::zero()).min(T::one());
    let c = v * s;
    let hp = h / T::lit(60.0);
    let x = c * (T::one() - (hp % T::lit(2.0) - T::one()).abs());
    let m = v - c;
    let z = T::zero();
    let (r, g, b) = match hp.floor().to_u32().unwrap_or(0).min(5) {
        0 => (c, x, z),
        1 => (x, c, z),
        2 => (z, c, x),
        3 => (z, x, c),
        4 => (x, z, c),
        _ => (c, z, x),
    };
    [r + m, g + m, b + m]
}

fn wrap_degrees<T: Real>(h: T) -> T {
    let full = T::lit(360.0);
    let w = h % full;
    let w = if w < T::zero() { w + full } else { w };
    if w >= full {
        T::zero()
    } else {
        w
    }
}

/// Signed smallest rotation from hue `a` to hue `b`, in `(-180, 180]`.
pub fn hue_difference(a: f64, b: f64) -> f64 {
    let d = wrap_degrees(b - a);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureKind {
    Body,
    Hand,
    Background,
}

/// Pixel rectangle `[x, x + width) × [y, y + height)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn full(width: u32, height: u32) -> Self {
        Self {
            x: 0,
            y: 0,
            width,
            height,
        }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y..self.y + self.height).flat_map(move |y| (self.x..self.x + self.width).map(move |x| (x, y)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Texture {
    pub id: String,
    pub kind: TextureKind,
    pub gender: Option<Gender>,
    /// Source collection; sampling can be balanced across collections.
    pub collection: String,
    pub pixels: RgbImage,
    /// Region whose mean color characterizes the texture (face or outer palm).
    pub sample_region: Rect,
}

impl Texture {
    pub fn new(
        id: impl Into<String>,
        kind: TextureKind,
        gender: Option<Gender>,
        collection: impl Into<String>,
        pixels: RgbImage,
        sample_region: Rect,
    ) -> Result<Self> {
        let id = id.into();
        let r = sample_region;
        if r.width == 0 || r.height == 0 {
            return invalid(format!("texture {id:?}: empty sample region"));
        }
        if r.x as u64 + r.width as u64 > pixels.width() as u64 || r.y as u64 + r.height as u64 > pixels.height() as u64 {
            return invalid(format!(
                "texture {id:?}: sample region {r:?} exceeds {}x{} image",
                pixels.width(),
                pixels.height()
            ));
        }
        Ok(Self {
            id,
            kind,
            gender,
            collection: collection.into(),
            pixels,
            sample_region,
        })
    }

    /// Bilinear lookup at UV coordinates with edge clamping, unit-scale RGB.
    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let (w, h) = self.pixels.dimensions();
        let x = (u * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
        let y = (v * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (x.floor() as u32, y.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let p = |x, y| self.pixels.get_pixel(x, y).0.map(|c| c as f64 / 255.0);
        let (a, b, c, d) = (p(x0, y0), p(x1, y0), p(x0, y1), p(x1, y1));
        std::array::from_fn(|k| {
            (a[k] * (1.0 - fx) + b[k] * fx) * (1.0 - fy) + (c[k] * (1.0 - fx) + d[k] * fx) * fy
        })
    }
}

fn pixel_hsv(p: &Rgb<u8>) -> [f64; 3] {
    rgb_to_hsv(p.0.map(|c| c as f64 / 255.0))
}

/// Mean HSV over the sample region; hue is the angle of the mean unit phasor.
pub fn mean_hsv(tex: &Texture) -> Result<[f64; 3]> {
    let r = tex.sample_region;
    if r.area() == 0 {
        return invalid(format!("texture {:?}: empty sample region", tex.id));
    }
    let (mut c, mut s_, mut ss, mut vs) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in r.pixels() {
        let [h, s, v] = pixel_hsv(tex.pixels.get_pixel(x, y));
        let rad = h.to_radians();
        c += rad.cos();
        s_ += rad.sin();
        ss += s;
        vs += v;
    }
    let n = r.area() as f64;
    let hue = if c.hypot(s_) < 1e-9 * n {
        0.0
    } else {
        wrap_degrees(s_.atan2(c).to_degrees())
    };
    Ok([hue, ss / n, vs / n])
}

/// Embedding used for nearest-hand search: `(cos h · s, sin h · s, v)`.
pub fn hsv_embedding(hsv: [f64; 3]) -> [f64; 3] {
    let rad = hsv[0].to_radians();
    [rad.cos() * hsv[1], rad.sin() * hsv[1], hsv[2]]
}

pub fn hsv_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (ea, eb) = (hsv_embedding(a), hsv_embedding(b));
    ((ea[0] - eb[0]).powi(2) + (ea[1] - eb[1]).powi(2) + (ea[2] - eb[2]).powi(2)).sqrt()
}

#[derive(Clone, Debug)]
pub struct HandMatch {
    pub index: usize,
    pub texture: Texture,
    /// Applied `(Δh degrees, Δs, Δv)`.
    pub shift: [f64; 3],
    /// True when saturation or value left `[0, 1]` inside the sample region,
    /// so the shifted mean cannot equal the body mean.
    pub clamped: bool,
}

/// Shifts every pixel by `(Δh, Δs, Δv)`; hue wraps, s and v clamp.
/// Returns the shifted image and whether any sample-region pixel clamped.
pub fn shift_hsv(tex: &Texture, shift: [f64; 3]) -> (RgbImage, bool) {
    let r = tex.sample_region;
    let mut clamped = false;
    let mut out = tex.pixels.clone();
    for (x, y, p) in out.enumerate_pixels_mut() {
        let [h, s, v] = pixel_hsv(p);
        let (s2, v2) = (s + shift[1], v + shift[2]);
        let inside = x >= r.x && x < r.x + r.width && y >= r.y && y < r.y + r.height;
        if inside && !((0.0..=1.0).contains(&s2) && (0.0..=1.0).contains(&v2)) {
            clamped = true;
        }
        let rgb = hsv_to_rgb([h + shift[0], s2, v2]);
        p.0 = rgb.map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8);
    }
    (out, clamped)
}

/// Nearest hand texture to the body's mean color, shifted onto that color.
pub fn match_hand_texture(body: &Texture, hands: &[Texture]) -> Result<HandMatch> {
    if hands.is_empty() {
        return invalid("no hand textures to match against");
    }
    let target = mean_hsv(body)?;
    let mut best = (f64::INFINITY, 0, [0.0; 3]);
    for (i, h) in hands.iter().enumerate() {
        let m = mean_hsv(h)?;
        let d = hsv_distance(target, m);
        if d < best.0 {
            best = (d, i, m);
        }
    }
    let (_, index, hand_mean) = best;
    let shift = [
        hue_difference(hand_mean[0], target[0]),
        target[1] - hand_mean[1],
        target[2] - hand_mean[2],
    ];
    let (pixels, clamped) = shift_hsv(&hands[index], shift);
    let mut texture = hands[index].clone();
    texture.pixels = pixels;
    Ok(HandMatch {
        index,
        texture,
        shift,
        clamped,
    })
}

/// Copies the hand-part UV regions of `hand` into a copy of `body`.
pub fn replace_hand_region<T: Real>(body: &Texture, hand: &Texture, model: &BodyModel<T>) -> Texture {
    let mut out = body.clone();
    let (w, h) = out.pixels.dimensions();
    let bounds = part_uv_bounds(model);
    for part in hand_part_ids(model) {
        let Some([u0, v0, u1, v1]) = bounds.get(part as usize).copied().flatten() else {
            continue;
        };
        let x0 = (u0 * w as f64).floor().max(0.0) as u32;
        let y0 = (v0 * h as f64).floor().max(0.0) as u32;
        let x1 = ((u1 * w as f64).ceil() as u32).min(w);
        let y1 = ((v1 * h as f64).ceil() as u32).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let c = hand.sample((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64);
                out.pixels.put_pixel(x, y, Rgb(c.map(|c| (c * 255.0).round() as u8)));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown split {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMap {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitMap {
    pub fn get(&self, s: Split) -> &[String] {
        match s {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|&s| self.get(s).iter().any(|x| x == id))
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }
}

/// Split sizes for `n` items: largest-remainder rounding of `ratios · n`,
/// then every split with a nonzero ratio is topped up to one item, taken
/// from the currently largest split.
pub fn split_counts(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return invalid(format!("split ratios must be non-negative, got {ratios:?}"));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return invalid(format!("split ratios sum to {sum}, expected 1"));
    }
    let nonzero = ratios.iter().filter(|r| **r > 0.0).count();
    if n < nonzero {
        return invalid(format!("{n} assets cannot fill {nonzero} non-empty splits"));
    }
    let exact = ratios.map(|r| r * n as f64);
    let mut counts = exact.map(|x| x.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if ratios[k] > 0.0 {
            counts[k] += 1;
            left -= 1;
        }
    }
    for k in 0..3 {
        if ratios[k] > 0.0 && counts[k] == 0 {
            let donor = (0..3).max_by_key(|&d| (counts[d], std::cmp::Reverse(d))).unwrap_or(0);
            counts[donor] -= 1;
            counts[k] = 1;
        }
    }
    Ok(counts)
}

/// Seeded shuffle of the (sorted) ids, then a contiguous train/val/test partition.
pub fn split_assets<R: Rng + ?Sized>(rng: &mut R, ids: &[String], ratios: [f64; 3]) -> Result<SplitMap> {
    let mut ids = ids.to_vec();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return invalid(format!("duplicate asset id {:?}", w[0]));
    }
    let [a, b, _] = split_counts(ids.len(), ratios)?;
    ids.shuffle(rng);
    let test = ids.split_off(a + b);
    let val = ids.split_off(a);
    Ok(SplitMap { train: ids, val, test })
}
