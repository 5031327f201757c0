use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::{sha256_hex, Manifest};
use crate::error::Result;
use crate::scene::{Mode, SceneSpec};
use crate::texture_lab::{Split, SplitMap};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub entries: usize,
    pub skipped: usize,
    pub missing: Vec<String>,
    pub mismatched: Vec<String>,
    /// Files under the dataset directory that no entry references.
    pub unreferenced: Vec<String>,
    /// Requested actor count → subsequences.
    pub actor_histogram: BTreeMap<usize, usize>,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn files_ok(&self) -> bool {
        self.missing.is_empty() && self.mismatched.is_empty() && self.unreferenced.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.files_ok() && self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "entries {} skipped {} missing {} mismatched {} unreferenced {}\n",
            self.entries,
            self.skipped,
            self.missing.len(),
            self.mismatched.len(),
            self.unreferenced.len()
        );
        for p in self.missing.iter().map(|p| ("missing", p)).chain(self.mismatched.iter().map(|p| ("mismatch", p))) {
            s += &format!("  {} {}\n", p.0, p.1);
        }
        for c in &self.checks {
            s += &format!(
                "{} {}: observed {:.4} target {:.4} ± {:.4} {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.observed,
                c.target,
                c.tolerance,
                c.detail
            );
        }
        s
    }
}

/// Binomial tolerance for a fraction estimated from `n` trials: three
/// standard errors, never tighter than 0.02.
fn tolerance(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    (3.0 * (p * (1.0 - p) / n as f64).sqrt()).max(0.02)
}

fn fraction_check(name: &str, hits: usize, n: usize, target: f64) -> AuditCheck {
    let observed = if n == 0 { f64::NAN } else { hits as f64 / n as f64 };
    let tol = tolerance(target, n);
    AuditCheck {
        name: name.into(),
        observed,
        target,
        tolerance: tol,
        passed: n == 0 || (observed - target).abs() <= tol,
        detail: format!("{hits}/{n}"),
    }
}

fn count_check(name: &str, violations: usize, detail: String) -> AuditCheck {
    AuditCheck {
        name: name.into(),
        observed: violations as f64,
        target: 0.0,
        tolerance: 0.0,
        passed: violations == 0,
        detail,
    }
}

/// Ids shared by two splits of `map`.
fn overlaps(map: &SplitMap) -> usize {
    let mut seen = BTreeSet::new();
    Split::ALL.iter().flat_map(|&s| map.get(s)).filter(|id| !seen.insert(id.as_str())).count()
}

/// Verifies every file hash and recomputes the sampling statistics of a
/// generated dataset. Missing files are listed, not fatal.
pub fn audit(manifest_path: impl AsRef<Path>) -> Result<AuditReport> {
    let manifest_path = manifest_path.as_ref();
    let m = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut rep = AuditReport {
        entries: m.entries.len(),
        skipped: m.skipped.len(),
        ..Default::default()
    };

    let mut referenced = BTreeSet::new();
    for rec in m.entries.iter().flat_map(|e| e.files()) {
        referenced.insert(root.join(&rec.path));
        match std::fs::read(root.join(&rec.path)) {
            Ok(bytes) if sha256_hex(&bytes) == rec.sha256 => {}
            Ok(_) => rep.mismatched.push(rec.path.clone()),
            Err(_) => rep.missing.push(rec.path.clone()),
        }
    }
    for e in walkdir::WalkDir::new(root).into_iter().filter_map(|e| e.ok()) {
        let p = e.path();
        if e.file_type().is_file() && p != manifest_path && !referenced.contains(p) {
            rep.unreferenced.push(p.strip_prefix(root).unwrap_or(p).display().to_string());
        }
    }

    let mut specs = Vec::new();
    for e in &m.entries {
        if let Ok(s) = SceneSpec::load(root.join(&e.scene.path)) {
            specs.push(s);
        }
    }
    let p = &m.params;
    let n = specs.len();

    let blurred = specs.iter().filter(|s| s.degrade.gaussian_blur_sigma.is_some()).count();
    rep.checks.push(fraction_check("gaussian_blur_fraction", blurred, n, p.gaussian_blur_probability));

    let (noisy, trials) = match p.mode {
        Mode::Mhof => (specs.iter().filter(|s| s.camera_noise.is_some()).count(), n),
        Mode::Shof => specs.iter().fold((0, 0), |(h, t), s| {
            let transitions = s.n_frames.saturating_sub(1);
            let noisy = s.camera_noise.as_ref().map_or(0, |c| c.deltas.iter().flatten().count());
            (h + noisy, t + transitions)
        }),
    };
    rep.checks.push(fraction_check("camera_noise_fraction", noisy, trials, p.camera_noise_probability));

    for s in &specs {
        *rep.actor_histogram.entry(s.requested_actors).or_default() += 1;
    }
    let bins = p.actors.1 - p.actors.0 + 1;
    let out_of_range: usize = rep
        .actor_histogram
        .iter()
        .filter(|(k, _)| **k < p.actors.0 || **k > p.actors.1)
        .map(|(_, v)| v)
        .sum();
    rep.checks.push(count_check(
        "actor_count_range",
        out_of_range,
        format!("range [{}, {}]", p.actors.0, p.actors.1),
    ));
    if bins > 1 {
        for k in p.actors.0..=p.actors.1 {
            let hits = rep.actor_histogram.get(&k).copied().unwrap_or(0);
            rep.checks.push(fraction_check(&format!("actor_count_{k}"), hits, n, 1.0 / bins as f64));
        }
    }

    let bound = p.shape_bound;
    let outside: usize = specs
        .iter()
        .flat_map(|s| &s.actors)
        .map(|a| a.shape.beta.iter().filter(|b| b.abs() > bound).count())
        .sum();
    rep.checks.push(count_check("shape_bound", outside, format!("|beta| <= {bound}")));

    let depth_off = specs.iter().filter(|s| s.background.depth != p.billboard_depth).count();
    rep.checks.push(count_check("billboard_depth", depth_off, format!("{} m", p.billboard_depth)));

    let a = &m.asset_splits;
    let shared: usize = [&a.bodies, &a.hands, &a.backgrounds, &a.motions, &a.hand_motions].map(overlaps).iter().sum();
    let mut used: BTreeMap<String, BTreeSet<Split>> = BTreeMap::new();
    let mut foreign = 0;
    for s in &specs {
        let mut ids = vec![(&a.backgrounds, s.background.texture_id.clone())];
        for act in &s.actors {
            ids.push((&a.bodies, act.texture_id.clone()));
            ids.push((&a.motions, act.motion.source_id.clone()));
            ids.extend(act.hand_texture_id.clone().map(|h| (&a.hands, h)));
            ids.extend(act.hand_motion_id.clone().map(|h| (&a.hand_motions, h)));
        }
        for (map, id) in ids {
            if map.split_of(&id) != Some(s.split) {
                foreign += 1;
            }
            used.entry(id).or_default().insert(s.split);
        }
    }
    let cross = used.values().filter(|s| s.len() > 1).count();
    rep.checks.push(count_check(
        "split_disjointness",
        shared + foreign + cross,
        format!("{shared} ids in several splits, {foreign} uses outside the own split, {cross} ids used by several splits"),
    ));
    Ok(rep)
}
