use humanflow::flow::{decode_flo, encode_flo, epe, epe_by_part, flow_to_color, read_flo, write_flo, FlowField};
use humanflow::render::SegMask;
use humanflow::Error;
use proptest::prelude::*;

fn field_strategy() -> impl Strategy<Value = FlowField> {
    (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
        let n = (w * h) as usize;
        prop::collection::vec(
            [prop::num::f32::NORMAL | prop::num::f32::ZERO | prop::num::f32::SUBNORMAL; 2],
            n,
        )
        .prop_map(move |data| FlowField::from_data(w, h, data).unwrap())
    })
}

fn triple() -> impl Strategy<Value = (FlowField, FlowField, FlowField)> {
    (1u32..8, 1u32..8).prop_flat_map(|(w, h)| {
        let v = prop::collection::vec([-50.0f32..50.0, -50.0f32..50.0], (w * h) as usize);
        (v.clone(), v.clone(), v).prop_map(move |(a, b, c)| {
            (
                FlowField::from_data(w, h, a).unwrap(),
                FlowField::from_data(w, h, b).unwrap(),
                FlowField::from_data(w, h, c).unwrap(),
            )
        })
    })
}

fn bits(f: &FlowField) -> Vec<u32> {
    f.data.iter().flat_map(|v| [v[0].to_bits(), v[1].to_bits()]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flo_round_trip_is_bit_exact(f in field_strategy()) {
        let bytes = encode_flo(&f).unwrap();
        prop_assert_eq!(bytes.len(), 12 + f.data.len() * 8);
        let back = decode_flo(&bytes).unwrap();
        prop_assert_eq!((back.width, back.height), (f.width, f.height));
        prop_assert_eq!(bits(&back), bits(&f));
    }

    #[test]
    fn epe_is_a_metric((a, b, c) in triple()) {
        let ab = epe(&a, &b, None).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(epe(&a, &a, None).unwrap(), 0.0);
        prop_assert_eq!(ab, epe(&b, &a, None).unwrap());
        let (ac, cb) = (epe(&a, &c, None).unwrap(), epe(&c, &b, None).unwrap());
        prop_assert!(ab <= ac + cb + 1e-9);
        if a.data != b.data {
            prop_assert!(ab > 0.0);
        }
    }

    #[test]
    fn part_errors_recombine((a, b, _) in triple(), labels in prop::collection::vec(0u16..4, 64)) {
        let seg = SegMask {
            width: a.width,
            height: a.height,
            data: (0..a.data.len()).map(|i| [1, labels[i]]).collect(),
        };
        let parts = epe_by_part(&a, &b, &seg).unwrap();
        let n: usize = parts.values().map(|p| p.pixels).sum();
        prop_assert_eq!(n, a.data.len());
        let mean = parts.values().map(|p| p.epe * p.pixels as f64).sum::<f64>() / n as f64;
        prop_assert!((mean - epe(&a, &b, None).unwrap()).abs() < 1e-9);
        for (id, p) in &parts {
            let mask: Vec<bool> = seg.data.iter().map(|l| l[1] == *id).collect();
            prop_assert!((p.epe - epe(&a, &b, Some(&mask)).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_offset_gives_the_offset_norm() {
    let gt = FlowField::from_data(3, 2, (0..6).map(|i| [i as f32, -(i as f32)]).collect()).unwrap();
    let est = FlowField::from_data(3, 2, gt.data.iter().map(|v| [v[0] + 3.0, v[1] + 4.0]).collect()).unwrap();
    assert_eq!(epe(&est, &gt, None).unwrap(), 5.0);

    // error only inside part 7
    let seg = SegMask {
        width: 3,
        height: 2,
        data: vec![[0, 0], [1, 7], [1, 7], [1, 2], [0, 0], [1, 2]],
    };
    let mut only7 = gt.clone();
    for i in [1, 2] {
        only7.data[i] = est.data[i];
    }
    let parts = epe_by_part(&only7, &gt, &seg).unwrap();
    assert_eq!(parts[&7].epe, 5.0);
    assert_eq!((parts[&0].epe, parts[&2].epe), (0.0, 0.0));
    assert_eq!(parts[&7].pixels, 2);
}

#[test]
fn mismatched_sizes_are_rejected() {
    let (a, b) = (FlowField::zeros(2, 2), FlowField::zeros(3, 2));
    assert!(epe(&a, &b, None).is_err());
    assert!(epe(&a, &a, Some(&[true; 3])).is_err());
    let seg = SegMask { width: 3, height: 2, data: vec![[0, 0]; 6] };
    assert!(epe_by_part(&a, &a, &seg).is_err());
    assert!(epe(&a, &a, Some(&[false; 4])).unwrap().is_nan());
}

#[test]
fn file_errors_carry_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.flo");
    write_flo(&FlowField::zeros(2, 2), &p).unwrap();
    assert_eq!(std::fs::metadata(&p).unwrap().len(), 44);
    assert_eq!(read_flo(&p).unwrap(), FlowField::zeros(2, 2));

    let mut bytes = std::fs::read(&p).unwrap();
    bytes[8..12].copy_from_slice(&0u32.to_le_bytes());
    match decode_flo(&bytes) {
        Err(Error::Format { offset, .. }) => assert_eq!(offset, 8),
        other => panic!("{other:?}"),
    }
    assert!(read_flo(dir.path().join("missing.flo")).is_err());
    let nan = FlowField::from_data(1, 1, vec![[f32::NAN, 0.0]]);
    assert!(nan.is_err() || encode_flo(&nan.unwrap()).is_err());
}

#[test]
fn color_coding() {
    let white = flow_to_color(&FlowField::zeros(3, 3), None);
    assert!(white.pixels().all(|p| p.0 == [255, 255, 255]));

    let hue = |rgb: [u8; 3]| {
        let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
        let (max, min) = (r.max(g).max(b), r.min(g).min(b));
        let d = max - min;
        let h = if max == r {
            ((g - b) / d).rem_euclid(6.0)
        } else if max == g {
            (b - r) / d + 2.0
        } else {
            (r - g) / d + 4.0
        };
        h * 60.0
    };
    for angle in [0.0f32, 0.7, 1.9, 3.0, 4.4, 5.5] {
        let (u, v) = (angle.cos(), angle.sin());
        let f = FlowField::from_data(2, 1, vec![[u, v], [-u, -v]]).unwrap();
        let img = flow_to_color(&f, Some(1.0));
        let (a, b) = (hue(img.get_pixel(0, 0).0), hue(img.get_pixel(1, 0).0));
        let diff = (a - b).rem_euclid(360.0);
        // the wheel is not perceptually uniform so opposite directions land
        // near, not at, opposite hues
        assert!((diff - 180.0).abs() < 45.0, "angle {angle}: {a} vs {b}");
    }

    let f = FlowField::from_data(2, 2, vec![[1.0, 0.5], [-2.0, 1.0], [0.0, -3.0], [0.25, 0.25]]).unwrap();
    let g = FlowField::from_data(2, 2, f.data.iter().map(|v| [v[0] * 10.0, v[1] * 10.0]).collect()).unwrap();
    assert_eq!(flow_to_color(&f, None), flow_to_color(&g, None));
}
