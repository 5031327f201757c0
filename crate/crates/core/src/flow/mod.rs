//! Dense flow fields: Middlebury `.flo` I/O, endpoint error and color coding.

mod color;
mod flo;

use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::render::SegMask;

pub use color::{flow_to_color, middlebury_wheel};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC, MAX_FLO_DIM};

/// Forward flow in pixels, `+x` right and `+y` down, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 2]; width as usize * height as usize],
        }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<[f32; 2]>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return invalid(format!("{} flow vectors for a {width}x{height} field", data.len()));
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f32; 2] {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }
}

fn check_pair(est: &FlowField, gt: &FlowField) -> Result<()> {
    if (est.width, est.height) != (gt.width, gt.height) {
        return invalid(format!(
            "flow size mismatch: {}x{} vs {}x{}",
            est.width, est.height, gt.width, gt.height
        ));
    }
    if !est.is_finite() || !gt.is_finite() {
        return invalid("flow contains non-finite values");
    }
    Ok(())
}

#[inline]
fn endpoint(a: [f32; 2], b: [f32; 2]) -> f64 {
    (a[0] as f64 - b[0] as f64).hypot(a[1] as f64 - b[1] as f64)
}

/// Mean endpoint error over the pixels selected by `mask` (all when `None`).
/// An empty selection yields NaN.
pub fn epe(est: &FlowField, gt: &FlowField, mask: Option<&[bool]>) -> Result<f64> {
    check_pair(est, gt)?;
    if let Some(m) = mask {
        if m.len() != gt.data.len() {
            return invalid(format!("mask has {} entries for {} pixels", m.len(), gt.data.len()));
        }
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, (a, b)) in est.data.iter().zip(&gt.data).enumerate() {
        if mask.is_none_or(|m| m[i]) {
            sum += endpoint(*a, *b);
            n += 1;
        }
    }
    Ok(if n == 0 { f64::NAN } else { sum / n as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartError {
    pub pixels: usize,
    pub epe: f64,
}

/// Endpoint error per part id; id 0 collects background pixels. Parts
/// without pixels are absent.
pub fn epe_by_part(est: &FlowField, gt: &FlowField, seg: &SegMask) -> Result<BTreeMap<u16, PartError>> {
    check_pair(est, gt)?;
    if (seg.width, seg.height) != (gt.width, gt.height) {
        return invalid(format!(
            "segmentation is {}x{}, flow is {}x{}",
            seg.width, seg.height, gt.width, gt.height
        ));
    }
    let mut acc: BTreeMap<u16, (f64, usize)> = BTreeMap::new();
    for ((a, b), label) in est.data.iter().zip(&gt.data).zip(&seg.data) {
        let e = acc.entry(label[1]).or_default();
        e.0 += endpoint(*a, *b);
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(k, (s, n))| (k, PartError { pixels: n, epe: s / n as f64 }))
        .collect())
}
