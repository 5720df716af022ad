//! The simulator's presets produce the qualitative behaviour the analyses are meant to detect.

use tactile_core::metrics::{force_curve, saturation_force};
use tactile_core::model::{ForceRamp, Protocol, ProtocolKind, RidgeSpec, SurfaceLoad, SweepPlan};
use tactile_core::simulator::{generate_run_with, generate_sweep_run, MaterialProfile, SimOptions};
use tactile_core::spatial::{evaluate_surface, PipelineConfig};
use tactile_core::model::RunData;

fn surface_snr(material: &MaterialProfile, ridge: RidgeSpec, load_n: f64, seed: u64) -> f64 {
    let opts = SimOptions::for_protocol(ProtocolKind::SpatialSensitivity);
    let flat = SurfaceLoad { load_n, ridge: None };
    let ridged = SurfaceLoad { load_n, ridge: Some(ridge) };
    let f = generate_sweep_run(&flat, 0, material, seed, &opts).unwrap();
    let r = generate_sweep_run(&ridged, 1, material, seed, &opts).unwrap();
    let (RunData::Surface { loaded: fl, unloaded: fu }, RunData::Surface { loaded, unloaded }) =
        (&f.data, &r.data)
    else {
        unreachable!()
    };
    let rec = evaluate_surface(
        loaded,
        unloaded,
        fl,
        fu,
        ridge,
        load_n,
        &PipelineConfig::default(),
        opts.mm_per_pixel,
    )
    .unwrap();
    rec.snr_db.unwrap()
}

#[test]
fn deep_coarse_ridge_is_clearly_resolved() {
    let ridge = RidgeSpec::new(1.5, 0.05, SweepPlan::standard().orientation).unwrap();
    let snr = surface_snr(&MaterialProfile::si_like(), ridge, 2.0, 11);
    assert!(snr >= 10.0, "{snr} dB");
}

#[test]
fn shallow_ridge_is_near_the_noise_floor() {
    let ridge = RidgeSpec::new(1.5, 0.005, SweepPlan::standard().orientation).unwrap();
    let deep = RidgeSpec::new(1.5, 0.05, SweepPlan::standard().orientation).unwrap();
    let mat = MaterialProfile::pu_like();
    let shallow = surface_snr(&mat, ridge, 2.0, 5);
    assert!(shallow < surface_snr(&mat, deep, 2.0, 5) - 3.0, "{shallow} dB");
}

fn ramp_saturation(material: &MaterialProfile, seed: u64) -> Option<f64> {
    let protocol = Protocol::ForceSensitivity(ForceRamp {
        max_force_n: 40.0,
        ..match Protocol::preset(ProtocolKind::ForceSensitivity) {
            Protocol::ForceSensitivity(r) => r,
            _ => unreachable!(),
        }
    });
    let opts = SimOptions::for_protocol(ProtocolKind::ForceSensitivity);
    let run = generate_run_with(&protocol, material, &[], seed, &opts).unwrap();
    let RunData::ForceRamp { frames, forces } = &run.data else { unreachable!() };
    let curve = force_curve(frames, forces).unwrap();
    saturation_force(&curve, 0.5).unwrap()
}

#[test]
fn saturating_preset_saturates_near_its_knee() {
    for seed in 0..3 {
        let f = ramp_saturation(&MaterialProfile::si_like(), seed).expect("saturation");
        assert!((8.0..=14.0).contains(&f), "seed {seed}: {f} N");
    }
}

#[test]
fn linear_preset_never_saturates() {
    for seed in 0..3 {
        assert_eq!(ramp_saturation(&MaterialProfile::pu_like(), seed), None, "seed {seed}");
    }
}
