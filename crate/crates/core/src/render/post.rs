use rayon::prelude::*;

use super::ColorImage;
use crate::error::{invalid, Result};
use crate::flow::FlowField;

/// Samples along each pixel's motion segment.
pub const MOTION_BLUR_STEPS: usize = 64;

/// Integrates over the forward interval `[t, t + 1]`: sample `s` sits at
/// `α = s / 63` along the pixel's flow and cross-fades frame `t` (looked up
/// `α·F` behind) with frame `t + 1` (looked up `(1 − α)·F` ahead).
pub fn apply_motion_blur(rgb_t: &ColorImage, rgb_t1: &ColorImage, flow: &FlowField) -> Result<ColorImage> {
    let dims = (rgb_t.width, rgb_t.height);
    if dims != (rgb_t1.width, rgb_t1.height) || dims != (flow.width, flow.height) {
        return invalid("motion blur inputs differ in size");
    }
    let w = rgb_t.width as usize;
    let last = (MOTION_BLUR_STEPS - 1) as f64;
    let data = flow
        .data
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            let (fx, fy) = (f[0] as f64, f[1] as f64);
            let mut acc = [0.0f64; 3];
            for s in 0..MOTION_BLUR_STEPS {
                let a = s as f64 / last;
                let p = rgb_t.sample(x - a * fx, y - a * fy);
                let q = rgb_t1.sample(x + (1.0 - a) * fx, y + (1.0 - a) * fy);
                for k in 0..3 {
                    acc[k] += (1.0 - a) * p[k] as f64 + a * q[k] as f64;
                }
            }
            acc.map(|c| (c / MOTION_BLUR_STEPS as f64) as f32)
        })
        .collect();
    Ok(ColorImage {
        width: rgb_t.width,
        height: rgb_t.height,
        data,
    })
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with clamped borders.
pub fn apply_gaussian_blur(img: &ColorImage, sigma: f64) -> Result<ColorImage> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return invalid(format!("blur sigma must be positive, got {sigma}"));
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (img.width as i64, img.height as i64);
    let pass = |src: &[[f32; 3]], horizontal: bool| -> Vec<[f32; 3]> {
        (0..w * h)
            .into_par_iter()
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let mut acc = [0.0f64; 3];
                for (t, k) in kernel.iter().zip(-r..=r) {
                    let j = if horizontal {
                        y * w + (x + k).clamp(0, w - 1)
                    } else {
                        (y + k).clamp(0, h - 1) * w + x
                    };
                    let c = src[j as usize];
                    for ch in 0..3 {
                        acc[ch] += t * c[ch] as f64;
                    }
                }
                acc.map(|c| c as f32)
            })
            .collect()
    };
    let tmp = pass(&img.data, true);
    Ok(ColorImage {
        width: img.width,
        height: img.height,
        data: pass(&tmp, false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(w: u32, h: u32, f: impl Fn(u32, u32) -> [f32; 3]) -> ColorImage {
        ColorImage {
            width: w,
            height: h,
            data: (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect(),
        }
    }

    #[test]
    fn zero_flow_averages_frames() {
        let a = image(9, 7, |x, y| [(x as f32) / 9.0, (y as f32) / 7.0, 0.25]);
        let b = image(9, 7, |x, _| [0.5, 1.0 - x as f32 / 9.0, 0.75]);
        let out = apply_motion_blur(&a, &b, &FlowField::zeros(9, 7)).unwrap();
        for ((o, p), q) in out.data.iter().zip(&a.data).zip(&b.data) {
            for k in 0..3 {
                assert!((o[k] - 0.5 * (p[k] + q[k])).abs() < 1.0 / 255.0);
            }
        }
        let same = apply_motion_blur(&a, &a, &FlowField::zeros(9, 7)).unwrap();
        for (o, p) in same.data.iter().zip(&a.data) {
            assert!((0..3).all(|k| (o[k] - p[k]).abs() < 1.0 / 255.0));
        }
    }

    #[test]
    fn size_mismatch_rejected() {
        let a = ColorImage::new(4, 4);
        assert!(apply_motion_blur(&a, &ColorImage::new(4, 5), &FlowField::zeros(4, 4)).is_err());
    }

    #[test]
    fn constant_image_survives_gaussian() {
        let a = ColorImage::filled(12, 9, [0.2, 0.4, 0.6]);
        let b = apply_gaussian_blur(&a, 1.0).unwrap();
        for c in &b.data {
            assert!((c[0] - 0.2).abs() < 1e-6 && (c[2] - 0.6).abs() < 1e-6);
        }
        assert!(apply_gaussian_blur(&a, 0.0).is_err());
    }
}
