//! Library results checked against independent closed-form or brute-force references.

use std::f64::consts::PI;

use tactile_core::metrics::{average_frames, force_curve, mae_series, saturation_force, Phase};
use tactile_core::model::{
    CycleRecord, Frame, FrameStack, LoadSample, Protocol, ProtocolKind, RunData, RunManifest, CHANNELS,
};
use tactile_core::spatial::{
    difference_of_gaussians, dog_peak_frequency, dog_transfer, gaussian_blur, gaussian_kernel, nearest_bins,
    scan_psd, ScanAxis,
};

fn frame(w: usize, h: usize, f: impl FnMut(usize, usize, usize) -> f64) -> Frame {
    Frame::from_fn(w, h, f).unwrap()
}

#[test]
fn stack_average_matches_per_pixel_mean() {
    let frames: Vec<Frame> = (0..5)
        .map(|k| frame(7, 4, |x, y, c| ((x * 31 + y * 17 + c * 7 + k * 13) % 256) as f64))
        .collect();
    let avg = average_frames(&FrameStack::new(frames.clone(), 30.0).unwrap()).unwrap();
    for y in 0..4 {
        for x in 0..7 {
            for c in 0..CHANNELS {
                let want = frames.iter().map(|f| f.get(x, y, c)).sum::<f64>() / 5.0;
                assert!((avg.get(x, y, c) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn wear_series_matches_hand_computed_values() {
    // Unloaded frames are flat images at 10, 12, 9; loaded at 50, 50, 53.
    let flat = |v: f64| FrameStack::new(vec![Frame::filled(3, 3, v).unwrap()], 30.0).unwrap();
    let cycles = [(10.0, 50.0), (12.0, 50.0), (9.0, 53.0)]
        .iter()
        .enumerate()
        .map(|(i, &(u, l))| CycleRecord {
            cycle_index: i as u32 + 1,
            distance_m: None,
            unloaded: flat(u),
            loaded: Some(flat(l)),
        })
        .collect();
    let protocol = match Protocol::preset(ProtocolKind::CyclicCompression) {
        Protocol::CyclicCompression(mut c) => {
            c.cycles = 3;
            Protocol::CyclicCompression(c)
        }
        _ => unreachable!(),
    };
    let run = RunManifest {
        protocol,
        material_label: "m".into(),
        sample_id: "s".into(),
        mm_per_pixel: None,
        fps: 30.0,
        data: RunData::Cycles(cycles),
        truth: None,
        source: None,
    };
    let s = mae_series(&run).unwrap();
    assert_eq!(s.mae_unloaded, [0.0, 2.0, 1.0]);
    assert_eq!(s.mae_loaded.unwrap(), [0.0, 0.0, 3.0]);
}

#[test]
fn blur_of_an_impulse_is_the_kernel_outer_product() {
    let sigma = 1.5;
    let k = gaussian_kernel(sigma);
    let r = k.len() / 2;
    let (w, h) = (31, 27);
    let (cx, cy) = (15, 13);
    let img = frame(w, h, |x, y, _| if (x, y) == (cx, cy) { 1.0 } else { 0.0 });
    let out = gaussian_blur(&img, sigma);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as i64 - cx as i64, y as i64 - cy as i64);
            let want = if dx.unsigned_abs() as usize <= r && dy.unsigned_abs() as usize <= r {
                k[(dx + r as i64) as usize] * k[(dy + r as i64) as usize]
            } else {
                0.0
            };
            assert!((out.get(x, y, 1) - want).abs() < 1e-15, "({x}, {y})");
        }
    }
    assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

/// Frequency response of a sampled symmetric kernel.
fn kernel_response(k: &[f64], f: f64) -> f64 {
    let r = (k.len() / 2) as f64;
    k.iter()
        .enumerate()
        .map(|(j, &v)| v * (2.0 * PI * f * (j as f64 - r)).cos())
        .sum()
}

#[test]
fn dog_gain_on_a_sinusoid_matches_the_kernel_response() {
    let (lo, hi) = (2.0, 12.0);
    let (w, h) = (400, 100);
    for period in [16.0, 24.0, 48.0, 96.0] {
        let f = 1.0 / period;
        let img = frame(w, h, |x, _, _| (2.0 * PI * f * x as f64).sin());
        let out = difference_of_gaussians(&img, lo, hi).unwrap();
        // Whole periods of an interior row, clear of the replicated edges.
        let (a, b) = (104, 296);
        let (mut s, mut c) = (0.0, 0.0);
        for x in a..b {
            let v = out.get(x, 50, 0);
            s += v * (2.0 * PI * f * x as f64).sin();
            c += v * (2.0 * PI * f * x as f64).cos();
        }
        let gain = 2.0 * (s * s + c * c).sqrt() / (b - a) as f64;
        let discrete = kernel_response(&gaussian_kernel(lo), f) - kernel_response(&gaussian_kernel(hi), f);
        assert!((gain - discrete).abs() < 1e-9, "period {period}: {gain} vs {discrete}");
        let continuous = dog_transfer(f, lo, hi);
        assert!((gain - continuous).abs() < 0.02, "period {period}: {gain} vs {continuous}");
    }
}

#[test]
fn dog_peak_is_a_maximum_of_the_transfer() {
    let (lo, hi) = (2.0, 12.0);
    let f = dog_peak_frequency(lo, hi);
    let g = dog_transfer(f, lo, hi);
    for d in [0.9, 0.99, 1.01, 1.1] {
        assert!(dog_transfer(f * d, lo, hi) < g);
    }
}

#[test]
fn pure_tone_on_a_bin_has_known_power() {
    // A sinusoid of amplitude A on bin k holds A²·N/2 over the line, all in bin k.
    let (n, k, amp) = (64, 5, 3.0);
    let img = frame(n, 2, |x, _, _| amp * (2.0 * PI * k as f64 * x as f64 / n as f64).cos() + 40.0);
    let spec = scan_psd(&img, ScanAxis::Rows, 0.5).unwrap();
    let want = amp * amp * n as f64 / 2.0;
    for (i, &p) in spec.psd.iter().enumerate() {
        if i == k {
            assert!((p - want).abs() < 1e-9 * want);
        } else {
            assert!(p < 1e-18 * want.max(1.0) * n as f64, "bin {i}: {p}");
        }
    }
    assert_eq!(nearest_bins(&spec, spec.bin_freqs[k]).unwrap(), [k - 1, k]);
    let between = 0.5 * (spec.bin_freqs[k] + spec.bin_freqs[k + 1]) + 1e-6;
    assert_eq!(nearest_bins(&spec, between).unwrap(), [k, k + 1]);
    assert!((spec.resolution() - 1.0 / (n as f64 * 0.5)).abs() < 1e-15);
}

fn triangle(t: f64, peak_t: f64, peak_f: f64) -> f64 {
    if t <= peak_t {
        peak_f * t / peak_t
    } else {
        peak_f * (2.0 * peak_t - t) / peak_t
    }
}

/// Frames whose every pixel reads `base + response(F(t))`, so the MAE to the
/// first frame is `response(F(t)) - response(F(0))`.
fn ramp(response: impl Fn(f64) -> f64) -> (FrameStack, Vec<LoadSample>) {
    let (peak_t, peak_f) = (10.0, 40.0);
    let log: Vec<LoadSample> = (0..=400)
        .map(|i| {
            let t = i as f64 * 0.05;
            LoadSample { timestamp: t, fx: 0.0, fy: 0.0, fz: triangle(t, peak_t, peak_f) }
        })
        .collect();
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.2).collect();
    let frames = times
        .iter()
        .map(|&t| Frame::filled(4, 4, 100.0 + response(triangle(t, peak_t, peak_f))).unwrap())
        .collect();
    (FrameStack::with_timestamps(frames, 5.0, times).unwrap(), log)
}

#[test]
fn force_curve_recovers_a_triangular_ramp() {
    let (frames, log) = ramp(|f| 0.5 * f);
    let curve = force_curve(&frames, &log).unwrap();
    assert_eq!(curve.samples.len(), 101);
    for s in &curve.samples {
        let f = triangle(s.t_s, 10.0, 40.0);
        assert!((s.force_n - f).abs() < 1e-9, "t = {}", s.t_s);
        assert!((s.mae - 0.5 * f).abs() < 1e-9);
        if s.t_s < 9.5 {
            assert_eq!(s.phase, Phase::Loading);
        } else if s.t_s > 10.5 {
            assert_eq!(s.phase, Phase::Unloading);
        }
    }
    assert_eq!(saturation_force(&curve, 0.5).unwrap(), None);
}

#[test]
fn saturation_lands_in_the_window_around_the_knee() {
    let knee = 10.0;
    let (frames, log) = ramp(|f| if f <= knee { f } else { knee + 0.1 * (f - knee) });
    let curve = force_curve(&frames, &log).unwrap();
    let sat = saturation_force(&curve, 0.5).unwrap().expect("saturates");
    // Some 5 N window holding the knee is the first to halve its slope.
    assert!((knee - 2.5..=knee + 2.5).contains(&sat), "{sat}");
}
