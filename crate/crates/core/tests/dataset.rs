use std::collections::BTreeMap;
use std::path::Path;

use humanflow::dataset::{
    audit, eval_dirs, generate, replay, sha256_hex, subsequence_seed, Counts, GenConfig, Manifest,
};
use humanflow::flow::{epe, read_flo, write_flo, FlowField};
use humanflow::render::SegMask;
use humanflow::scene::{Mode, SceneSpec};
use humanflow::texture_lab::Split;
use humanflow::Error;

fn small_config(mode: Mode, counts: Counts, seed: u64) -> GenConfig {
    let mut cfg = GenConfig::new(mode, counts);
    cfg.seed = seed;
    cfg.assets.coarse_model = true;
    cfg.overrides.image_width = Some(96);
    cfg.overrides.image_height = Some(96);
    cfg.overrides.focal = Some(120.0);
    cfg
}

fn mhof_config(seed: u64) -> GenConfig {
    small_config(Mode::Mhof, Counts { train: 2, val: 1, test: 1 }, seed)
}

fn hashes(m: &Manifest) -> BTreeMap<String, String> {
    m.entries.iter().flat_map(|e| e.files()).map(|r| (r.path.clone(), r.sha256.clone())).collect()
}

fn file_hashes(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), sha256_hex(&std::fs::read(&p).unwrap())))
        .collect()
}

#[test]
fn counts_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&mhof_config(11), dir.path()).unwrap();
    assert_eq!(m.entries.len() + m.skipped.len(), 4);
    for e in &m.entries {
        assert_eq!((e.rgb.len(), e.flow.len(), e.seg.len()), (10, 9, 10));
        assert_eq!(e.seed, subsequence_seed(11, e.split, e.index));
        let spec = SceneSpec::load(dir.path().join(&e.scene.path)).unwrap();
        assert_eq!(spec.background.depth, 12.0);
        assert!((4..=8).contains(&spec.requested_actors));
        assert!(!spec.actors.is_empty() && spec.actors.len() <= spec.requested_actors);
        for f in &e.flow {
            let flow = read_flo(dir.path().join(&f.path)).unwrap();
            assert_eq!((flow.width, flow.height), (96, 96));
        }
    }
    let per_split = |s: Split| m.entries.iter().filter(|e| e.split == s).count();
    assert!(per_split(Split::Train) <= 2 && per_split(Split::Val) <= 1 && per_split(Split::Test) <= 1);

    let report = audit(dir.path().join("manifest.json")).unwrap();
    assert!(report.files_ok(), "{}", report.summary());
    for name in ["shape_bound", "split_disjointness", "billboard_depth", "actor_count_range"] {
        let c = report.checks.iter().find(|c| c.name == name).unwrap();
        assert!(c.passed, "{}", report.summary());
    }
}

#[test]
fn same_seed_same_bytes_regardless_of_workers() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = mhof_config(3);
    cfg.workers = 1;
    let ma = generate(&cfg, a.path()).unwrap();
    cfg.workers = 3;
    let mb = generate(&cfg, b.path()).unwrap();
    assert!(!ma.entries.is_empty());
    assert_eq!(hashes(&ma), hashes(&mb));
    assert_eq!(ma.entries, mb.entries);
    assert_eq!(ma.skipped, mb.skipped);
    assert_eq!(ma.asset_splits, mb.asset_splits);

    let other = generate(&mhof_config(4), tempfile::tempdir().unwrap().path()).unwrap();
    assert_ne!(hashes(&ma), hashes(&other));
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&small_config(Mode::Mhof, Counts { train: 1, val: 0, test: 0 }, 21), dir.path()).unwrap();
    let e = &m.entries[0];
    let spec_path = dir.path().join(&e.scene.path);
    let entry_dir = spec_path.parent().unwrap().to_path_buf();
    let original = file_hashes(&entry_dir);

    let out = tempfile::tempdir().unwrap();
    let records = replay(&spec_path, out.path()).unwrap();
    assert_eq!(file_hashes(out.path()), original);
    assert_eq!(records.len(), original.len());

    // delete outputs, replay in place
    for name in original.keys().filter(|n| n.as_str() != "scene.json") {
        std::fs::remove_file(entry_dir.join(name)).unwrap();
    }
    replay(&spec_path, &entry_dir).unwrap();
    assert_eq!(file_hashes(&entry_dir), original);
    assert!(audit(dir.path().join("manifest.json")).unwrap().files_ok());

    let mut spec = SceneSpec::load(&spec_path).unwrap();
    spec.actors[0].shape.beta[0] += 0.5;
    let tampered_path = out.path().join("tampered.json");
    spec.save(&tampered_path).unwrap();
    let t_out = tempfile::tempdir().unwrap();
    replay(&tampered_path, t_out.path()).unwrap();
    let tampered = file_hashes(t_out.path());
    assert!(original.iter().any(|(k, v)| k.starts_with("rgb_") && tampered[k] != *v));
}

#[test]
fn replay_rejects_other_schema_versions() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&small_config(Mode::Mhof, Counts { train: 1, val: 0, test: 0 }, 5), dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(&m.entries[0].scene.path)).unwrap();
    let bumped = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert_ne!(bumped, text);
    let p = dir.path().join("old.json");
    std::fs::write(&p, bumped).unwrap();
    let err = replay(&p, dir.path().join("r")).unwrap_err();
    assert!(matches!(err, Error::SchemaVersion { found: 99, expected: 1 }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("99") && msg.contains('1'));
}

#[test]
fn audit_lists_missing_and_stray_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&small_config(Mode::Mhof, Counts { train: 1, val: 0, test: 0 }, 8), dir.path()).unwrap();
    let e = &m.entries[0];
    std::fs::remove_file(dir.path().join(&e.rgb[3].path)).unwrap();
    std::fs::write(dir.path().join(&e.seg[0].path), b"not a png").unwrap();
    std::fs::write(dir.path().join("stray.txt"), b"x").unwrap();
    let r = audit(dir.path().join("manifest.json")).unwrap();
    assert_eq!(r.missing, vec![e.rgb[3].path.clone()]);
    assert_eq!(r.mismatched, vec![e.seg[0].path.clone()]);
    assert_eq!(r.unreferenced, vec!["stray.txt".to_string()]);
    assert!(!r.passed());
}

#[test]
fn shof_generation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Mode::Shof, Counts { train: 2, val: 0, test: 1 }, 2);
    cfg.overrides.subsequence_length = Some(6);
    let m = generate(&cfg, dir.path()).unwrap();
    assert!(!m.entries.is_empty());
    for e in &m.entries {
        let spec = SceneSpec::load(dir.path().join(&e.scene.path)).unwrap();
        assert_eq!((spec.actors.len(), spec.background.depth, spec.n_frames), (1, 9.0, 6));
        assert!(spec.actors[0].shape.beta.iter().all(|b| b.abs() <= 3.0));
    }
    // the SHOF texture ratios leave no validation assets
    cfg.counts.val = 1;
    assert!(matches!(generate(&cfg, dir.path().join("v")), Err(Error::InvalidArgument(_) | Error::Asset(_))));
}

#[test]
fn startup_errors_come_first() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = mhof_config(1);
    cfg.assets.motions = Some(dir.path().join("no-such-dir"));
    let out = dir.path().join("out");
    let err = generate(&cfg, &out).unwrap_err();
    assert!(!matches!(err, Error::Generation(_) | Error::Internal(_)), "{err}");
    assert!(!out.exists());

    let mut cfg = mhof_config(1);
    cfg.assets.textures = Some(dir.path().join("missing.json"));
    assert!(generate(&cfg, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn loads_config_file_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("motions")).unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(
        &p,
        r#"{"mode": "shof", "seed": 4, "counts": {"train": 1},
            "assets": {"motions": "motions", "coarse_model": true},
            "overrides": {"image_width": 64, "image_height": 64}}"#,
    )
    .unwrap();
    let cfg = GenConfig::load(&p).unwrap();
    assert_eq!(cfg.assets.motions.as_deref(), Some(dir.path().join("motions").as_path()));
    // the directory holds no motion files
    assert!(matches!(generate(&cfg, dir.path().join("out")), Err(Error::Asset(_))));
}

#[test]
fn eval_ground_truth_against_itself_and_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&small_config(Mode::Mhof, Counts { train: 1, val: 0, test: 1 }, 6), dir.path()).unwrap();
    let same = eval_dirs(dir.path(), dir.path(), Some(dir.path())).unwrap();
    assert_eq!(same.files, m.entries.len() * 9);
    assert!(same.rows.iter().all(|r| r.epe == 0.0));
    assert!(same.rows.len() > 2);

    // estimates = gt + (3, 4)
    let est = tempfile::tempdir().unwrap();
    let mut direct = Vec::new();
    for e in &m.entries {
        for f in &e.flow {
            let gt = read_flo(dir.path().join(&f.path)).unwrap();
            let shifted = FlowField {
                data: gt.data.iter().map(|v| [v[0] + 3.0, v[1] + 4.0]).collect(),
                ..gt.clone()
            };
            let out = est.path().join(&f.path);
            std::fs::create_dir_all(out.parent().unwrap()).unwrap();
            write_flo(&shifted, &out).unwrap();
            direct.push(epe(&shifted, &gt, None).unwrap());
        }
    }
    let t = eval_dirs(est.path(), dir.path(), Some(dir.path())).unwrap();
    let all = t.overall().unwrap();
    let mean = direct.iter().sum::<f64>() / direct.len() as f64;
    assert!((all.epe - mean).abs() < 1e-9);
    let n: usize = t.rows.iter().filter(|r| r.part != "all").map(|r| r.pixels).sum();
    assert_eq!(n, all.pixels);
    let recombined: f64 =
        t.rows.iter().filter(|r| r.part != "all").map(|r| r.epe * r.pixels as f64).sum::<f64>() / n as f64;
    assert!((recombined - all.epe).abs() < 1e-9);
    let csv = t.to_csv();
    assert!(csv.starts_with("part,pixels,epe\n") && csv.contains("\nbackground,") && csv.contains("\nall,"));

    let no_seg = eval_dirs(est.path(), dir.path(), None).unwrap();
    assert_eq!(no_seg.rows.len(), 1);
    assert!((no_seg.rows[0].epe - all.epe).abs() < 1e-12);

    // a masked part id survives the PNG round trip
    let seg_png = image::open(dir.path().join(&m.entries[0].seg[0].path)).unwrap().to_rgb8();
    let seg = SegMask::from_png_image(&seg_png);
    assert!(seg.data.iter().any(|l| l[0] > 0 && l[1] > 0));

    std::fs::remove_file(est.path().join(&m.entries[0].flow[0].path)).unwrap();
    assert!(eval_dirs(est.path(), dir.path(), None).is_err());
}
