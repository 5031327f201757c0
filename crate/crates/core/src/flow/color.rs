use image::{Rgb, RgbImage};

use super::FlowField;

/// The 55-entry Middlebury color wheel (RY, YG, GC, CB, BM, MR segments).
pub fn middlebury_wheel() -> Vec<[f64; 3]> {
    let (ry, yg, gc, cb, bm, mr) = (15, 6, 4, 11, 13, 6);
    let mut w = Vec::with_capacity(ry + yg + gc + cb + bm + mr);
    let ramp = |i: usize, n: usize| i as f64 / n as f64;
    w.extend((0..ry).map(|i| [1.0, ramp(i, ry), 0.0]));
    w.extend((0..yg).map(|i| [1.0 - ramp(i, yg), 1.0, 0.0]));
    w.extend((0..gc).map(|i| [0.0, 1.0, ramp(i, gc)]));
    w.extend((0..cb).map(|i| [0.0, 1.0 - ramp(i, cb), 1.0]));
    w.extend((0..bm).map(|i| [ramp(i, bm), 0.0, 1.0]));
    w.extend((0..mr).map(|i| [1.0, 0.0, 1.0 - ramp(i, mr)]));
    w
}

fn percentile_99(flow: &FlowField) -> f64 {
    let mut mags: Vec<f64> = flow
        .data
        .iter()
        .map(|v| (v[0] as f64).hypot(v[1] as f64))
        .filter(|m| m.is_finite())
        .collect();
    if mags.is_empty() {
        return 0.0;
    }
    mags.sort_by(f64::total_cmp);
    mags[((mags.len() - 1) as f64 * 0.99).round() as usize]
}

/// Middlebury visualization: hue encodes direction, saturation the magnitude
/// relative to `max_magnitude` (default: the 99th percentile). Vectors beyond
/// the maximum are darkened; zero flow is white.
pub fn flow_to_color(flow: &FlowField, max_magnitude: Option<f64>) -> RgbImage {
    let wheel = middlebury_wheel();
    let n = wheel.len();
    let max = max_magnitude.unwrap_or_else(|| percentile_99(flow));
    let max = if max > 0.0 && max.is_finite() { max } else { 1.0 };
    let mut img = RgbImage::new(flow.width, flow.height);
    for (p, v) in img.pixels_mut().zip(&flow.data) {
        let (u, v) = (v[0] as f64 / max, v[1] as f64 / max);
        if !(u.is_finite() && v.is_finite()) {
            *p = Rgb([0, 0, 0]);
            continue;
        }
        let rad = u.hypot(v);
        let a = (-v).atan2(-u) / std::f64::consts::PI;
        let fk = (a + 1.0) / 2.0 * (n - 1) as f64;
        let k0 = fk.floor() as usize % n;
        let k1 = (k0 + 1) % n;
        let f = fk - fk.floor();
        *p = Rgb(std::array::from_fn(|c| {
            let col = (1.0 - f) * wheel[k0][c] + f * wheel[k1][c];
            let col = if rad <= 1.0 { 1.0 - rad * (1.0 - col) } else { col * 0.75 };
            (255.0 * col).round().clamp(0.0, 255.0) as u8
        }));
    }
    img
}
