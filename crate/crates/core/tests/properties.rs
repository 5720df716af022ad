use proptest::prelude::*;
use tactile_core::metrics::{mae, mae_series, MaeSeriesBuilder};
use tactile_core::model::{
    load_manifest, save_manifest, CycleRecord, Frame, FrameStack, Protocol, ProtocolKind, RunData,
    RunManifest, CHANNELS,
};
use tactile_core::simulator::{Response, WearEvent, WearMode};
use tactile_core::spatial::{scan_psd, snr_db, stack_difference, ScanAxis};

fn frame_8bit(w: usize, h: usize) -> impl Strategy<Value = Frame> {
    prop::collection::vec(0u8..=255, w * h * CHANNELS)
        .prop_map(move |v| Frame::new(w, h, v.into_iter().map(f64::from).collect()).unwrap())
}

fn frame_pair() -> impl Strategy<Value = (Frame, Frame)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| (frame_8bit(w, h), frame_8bit(w, h)))
}

fn frame_triple() -> impl Strategy<Value = (Frame, Frame, Frame)> {
    (1usize..10, 1usize..10).prop_flat_map(|(w, h)| (frame_8bit(w, h), frame_8bit(w, h), frame_8bit(w, h)))
}

fn stack(frames: Vec<Frame>) -> FrameStack {
    FrameStack::new(frames, 30.0).unwrap()
}

proptest! {
    #[test]
    fn mae_is_a_metric((a, b, c) in frame_triple()) {
        let ab = mae(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, mae(&b, &a).unwrap());
        prop_assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let via = mae(&a, &c).unwrap() + mae(&c, &b).unwrap();
        prop_assert!(ab <= via + 1e-9);
    }

    #[test]
    fn integer_offset_gives_its_magnitude((a, _) in frame_pair(), k in -300i32..300) {
        prop_assert_eq!(mae(&a.offset(f64::from(k)), &a).unwrap(), f64::from(k.abs()));
    }

    #[test]
    fn snr_is_antisymmetric_and_scale_free(p in 1e-6f64..1e6, q in 1e-6f64..1e6, s in 1e-3f64..1e3) {
        let pq = snr_db(p, q).unwrap().unwrap();
        let qp = snr_db(q, p).unwrap().unwrap();
        prop_assert!((pq + qp).abs() < 1e-9);
        let scaled = snr_db(p * s, q * s).unwrap().unwrap();
        prop_assert!((pq - scaled).abs() < 1e-9);
    }

    #[test]
    fn psd_conserves_line_energy(w in 16usize..70, h in 1usize..5, seed in any::<u64>()) {
        let mut state = seed;
        let img = Frame::from_fn(w, h, |_, _, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 40) as f64 / 1e4
        }).unwrap();
        let spec = scan_psd(&img, ScanAxis::Rows, 0.1).unwrap();
        let mut energy = 0.0;
        for y in 0..h {
            for c in 0..CHANNELS {
                let line: Vec<f64> = (0..w).map(|x| img.get(x, y, c)).collect();
                let m = line.iter().sum::<f64>() / w as f64;
                energy += line.iter().map(|v| (v - m).powi(2)).sum::<f64>();
            }
        }
        energy /= (h * CHANNELS) as f64;
        prop_assert!((spec.total_power() - energy).abs() <= 1e-9 * energy.max(1e-300));
        prop_assert!(spec.psd.iter().all(|&p| p >= 0.0));
        prop_assert!(spec.psd[0] <= 1e-9 * energy.max(1.0), "DC bin {}", spec.psd[0]);
    }

    #[test]
    fn constant_shift_cancels_exactly(
        (a, b, c, d) in (1usize..10, 1usize..10).prop_flat_map(|(w, h)| {
            (frame_8bit(w, h), frame_8bit(w, h), frame_8bit(w, h), frame_8bit(w, h))
        }),
        k in 0u8..100,
    ) {
        let (l, u) = (stack(vec![a, b]), stack(vec![c, d]));
        let k = f64::from(k);
        let base = stack_difference(&l, &u).unwrap();
        let shifted = stack_difference(&l.offset(k), &u.offset(k)).unwrap();
        prop_assert_eq!(base, shifted);
    }

    #[test]
    fn wear_severity_grows_to_its_final_value(
        onset in 1u32..50,
        extra in 0u32..50,
        severity in 0.0f64..=1.0,
        linear in any::<bool>(),
    ) {
        let final_cycle = onset + extra;
        let mode = if linear { WearMode::Tear } else { WearMode::Puncture };
        let e = WearEvent::new(mode, onset, severity, 0.0, 0.0);
        prop_assert_eq!(e.severity_at(onset - 1, final_cycle), 0.0);
        let mut prev = 0.0;
        for c in onset..=final_cycle {
            let s = e.severity_at(c, final_cycle);
            prop_assert!(s >= prev && s <= severity);
            prev = s;
        }
        prop_assert!((prev - severity).abs() < 1e-12);
    }

    #[test]
    fn saturating_response_is_monotone_and_continuous(knee in 0.0f64..30.0, frac in 0.0f64..=1.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let r = Response::Saturating { knee_n: knee, post_knee_fraction: frac };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(r.apply(lo) <= r.apply(hi));
        prop_assert!((r.apply(knee + 1e-9) - r.apply(knee)).abs() < 1e-8);
        prop_assert!(r.apply(hi) <= Response::Linear.apply(hi));
    }
}

fn cycle_run(frames: &[(Frame, Frame)]) -> RunManifest {
    let cycles = frames
        .iter()
        .enumerate()
        .map(|(i, (u, l))| CycleRecord {
            cycle_index: i as u32 + 1,
            distance_m: None,
            unloaded: stack(vec![u.clone()]),
            loaded: Some(stack(vec![l.clone()])),
        })
        .collect();
    let protocol = match Protocol::preset(ProtocolKind::CyclicCompression) {
        Protocol::CyclicCompression(mut c) => {
            c.cycles = frames.len() as u32;
            Protocol::CyclicCompression(c)
        }
        _ => unreachable!(),
    };
    RunManifest {
        protocol,
        material_label: "test".into(),
        sample_id: "prop".into(),
        mm_per_pixel: None,
        fps: 30.0,
        data: RunData::Cycles(cycles),
        truth: None,
        source: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn manifests_round_trip(pairs in (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
        prop::collection::vec((frame_8bit(w, h), frame_8bit(w, h)), 1..4)
    })) {
        let run = cycle_run(&pairs);
        let dir = tempfile::tempdir().unwrap();
        save_manifest(&run, dir.path()).unwrap();
        prop_assert_eq!(load_manifest(dir.path()).unwrap(), run);
    }

    #[test]
    fn streaming_series_matches_batch(pairs in (1usize..6, 1usize..6).prop_flat_map(|(w, h)| {
        prop::collection::vec((frame_8bit(w, h), frame_8bit(w, h)), 1..6)
    })) {
        let run = cycle_run(&pairs);
        let batch = mae_series(&run).unwrap();
        let mut builder = MaeSeriesBuilder::new();
        for c in run.cycles().unwrap() {
            builder.push(c).unwrap();
        }
        prop_assert_eq!(builder.finish().unwrap(), batch);
    }
}
