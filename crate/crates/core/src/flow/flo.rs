use std::fs;
use std::path::Path;

use super::FlowField;
use crate::error::{invalid, io_err, Error, Result};

/// Header tag, the float whose little-endian bytes spell `PIEH`.
pub const FLO_MAGIC: f32 = 202021.25;
/// Largest accepted width or height.
pub const MAX_FLO_DIM: u32 = 100_000;

const HEADER: usize = 12;

fn format_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Format {
        offset: offset as u64,
        message: message.into(),
    })
}

pub fn encode_flo(flow: &FlowField) -> Result<Vec<u8>> {
    if !flow.is_finite() {
        return invalid("cannot write non-finite flow");
    }
    if flow.width == 0 || flow.height == 0 || flow.width > MAX_FLO_DIM || flow.height > MAX_FLO_DIM {
        return invalid(format!("flow size {}x{} not writable", flow.width, flow.height));
    }
    let mut out = Vec::with_capacity(HEADER + flow.data.len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&flow.width.to_le_bytes());
    out.extend_from_slice(&flow.height.to_le_bytes());
    for [u, v] in &flow.data {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < HEADER {
        return format_err(bytes.len(), format!("truncated header ({} bytes)", bytes.len()));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let magic = f32::from_le_bytes(word(0));
    if magic.to_bits() != FLO_MAGIC.to_bits() {
        return format_err(0, format!("bad magic {magic}"));
    }
    let width = u32::from_le_bytes(word(4));
    let height = u32::from_le_bytes(word(8));
    if width == 0 || width > MAX_FLO_DIM {
        return format_err(4, format!("width {width} outside [1, {MAX_FLO_DIM}]"));
    }
    if height == 0 || height > MAX_FLO_DIM {
        return format_err(8, format!("height {height} outside [1, {MAX_FLO_DIM}]"));
    }
    let expected = HEADER + width as usize * height as usize * 8;
    if bytes.len() < expected {
        return format_err(bytes.len(), format!("truncated data, expected {expected} bytes"));
    }
    if bytes.len() > expected {
        return format_err(expected, format!("{} trailing bytes", bytes.len() - expected));
    }
    let data = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| {
            [
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
            ]
        })
        .collect();
    Ok(FlowField { width, height, data })
}

pub fn write_flo(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_flo(flow)?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_flo(&bytes)
}
