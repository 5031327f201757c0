use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{io_err, Error, Result};
use crate::flow::{epe_by_part, read_flo};
use crate::render::SegMask;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    /// Part id, `background` for id 0, or `all`.
    pub part: String,
    pub pixels: usize,
    pub epe: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalTable {
    pub files: usize,
    pub rows: Vec<EvalRow>,
}

impl EvalTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("part,pixels,epe\n");
        for r in &self.rows {
            s += &format!("{},{},{:.6}\n", r.part, r.pixels, r.epe);
        }
        s
    }

    pub fn overall(&self) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.part == "all")
    }
}

/// Mask matching a flow file: `flow_XXXX.flo` pairs with `seg_XXXX.png`,
/// any other name with the same stem and a `.png` extension.
fn seg_path(seg_dir: &Path, rel: &Path) -> PathBuf {
    let stem = rel.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let name = match stem.strip_prefix("flow_") {
        Some(rest) => format!("seg_{rest}.png"),
        None => format!("{stem}.png"),
    };
    seg_dir.join(rel.with_file_name(name))
}

/// Pixel-weighted endpoint error of every `.flo` file under `gt_dir` against
/// the file at the same relative path under `est_dir`, optionally broken
/// down by the part ids of the matching masks under `seg_dir`.
pub fn eval_dirs(est_dir: &Path, gt_dir: &Path, seg_dir: Option<&Path>) -> Result<EvalTable> {
    if !gt_dir.is_dir() {
        return Err(Error::Asset(format!("{} is not a directory", gt_dir.display())));
    }
    let mut gt_files: Vec<PathBuf> = walkdir::WalkDir::new(gt_dir)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "flo"))
        .map(|e| e.path().strip_prefix(gt_dir).map(Path::to_path_buf).unwrap_or_default())
        .collect();
    gt_files.sort();
    if gt_files.is_empty() {
        return Err(Error::Asset(format!("no .flo files under {}", gt_dir.display())));
    }
    let mut acc: BTreeMap<u16, (f64, usize)> = BTreeMap::new();
    let (mut total, mut pixels) = (0.0, 0usize);
    for rel in &gt_files {
        let gt = read_flo(gt_dir.join(rel))?;
        let est_path = est_dir.join(rel);
        if !est_path.is_file() {
            return Err(Error::Asset(format!("missing estimate {}", est_path.display())));
        }
        let est = read_flo(&est_path)?;
        let seg = match seg_dir {
            Some(d) => {
                let p = seg_path(d, rel);
                let img = image::open(&p)
                    .map_err(|e| Error::Asset(format!("{}: {e}", p.display())))?
                    .to_rgb8();
                SegMask::from_png_image(&img)
            }
            None => SegMask {
                width: gt.width,
                height: gt.height,
                data: vec![[0, 0]; gt.data.len()],
            },
        };
        for (part, e) in epe_by_part(&est, &gt, &seg)? {
            let a = acc.entry(part).or_default();
            a.0 += e.epe * e.pixels as f64;
            a.1 += e.pixels;
            total += e.epe * e.pixels as f64;
            pixels += e.pixels;
        }
    }
    let mut rows = Vec::new();
    if seg_dir.is_some() {
        rows.extend(acc.iter().map(|(&part, &(sum, n))| EvalRow {
            part: if part == 0 { "background".into() } else { part.to_string() },
            pixels: n,
            epe: sum / n as f64,
        }));
    }
    rows.push(EvalRow {
        part: "all".into(),
        pixels,
        epe: total / pixels as f64,
    });
    Ok(EvalTable {
        files: gt_files.len(),
        rows,
    })
}

/// Writes the CSV of [`eval_dirs`] to `path`.
pub fn write_csv(table: &EvalTable, path: &Path) -> Result<()> {
    std::fs::write(path, table.to_csv()).map_err(io_err(path))
}
