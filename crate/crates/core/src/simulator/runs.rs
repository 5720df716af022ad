use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wear::apply_wear;
use super::{
    derive_seed, illumination, noisy_copies, render_clean, MaterialProfile, SceneKind, SceneSpec,
    WearEvent, QVGA_MM_PER_PIXEL, VGA_MM_PER_PIXEL,
};
use crate::error::{Error, Result};
use crate::model::{
    Contact, CycleRecord, CyclicLoading, Frame, FrameStack, LoadSample, Protocol, ProtocolKind,
    RidgeSpec, RunData, RunHeader, RunManifest, SurfaceLoad, SweepPlan, INDENTER_TIP_RADIUS_MM,
};

/// Force log samples per frame interval.
pub const FORCE_LOG_OVERSAMPLING: usize = 4;
/// Standard deviation of simulated load-cell noise.
pub const FORCE_NOISE_N: f64 = 0.02;
/// Lateral displacement of the indenter contact per newton of lateral load.
const SHEAR_MM_PER_N: f64 = 0.05;
/// Stream reserved for force-log noise.
const FORCE_STREAM: u64 = u64::MAX;

/// What a simulated run was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub material: MaterialProfile,
    pub wear_events: Vec<WearEvent>,
}

/// Capture settings for simulated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub width: usize,
    pub height: usize,
    pub mm_per_pixel: f64,
    pub frames_per_stack: usize,
    /// Overrides the protocol's cycle count (cyclic protocols only).
    pub cycles: Option<u32>,
    /// Frames captured over a force ramp.
    pub ramp_frames: usize,
    pub fps: f64,
}

impl SimOptions {
    /// 320×240 for resilience and force runs, 640×480 for spatial runs.
    pub fn for_protocol(kind: ProtocolKind) -> Self {
        let qvga = SimOptions {
            width: 320,
            height: 240,
            mm_per_pixel: QVGA_MM_PER_PIXEL,
            frames_per_stack: 3,
            cycles: None,
            ramp_frames: 241,
            fps: 30.0,
        };
        match kind {
            ProtocolKind::SpatialSensitivity => SimOptions {
                width: 640,
                height: 480,
                mm_per_pixel: VGA_MM_PER_PIXEL,
                frames_per_stack: 8,
                ..qvga
            },
            _ => qvga,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Argument("resolution must be positive".into()));
        }
        if self.frames_per_stack == 0 {
            return Err(Error::Argument("frames per stack must be at least 1".into()));
        }
        if self.cycles == Some(0) {
            return Err(Error::Argument("cycle count must be at least 1".into()));
        }
        if self.ramp_frames < 3 {
            return Err(Error::Argument("a force ramp needs at least 3 frames".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Argument(format!("fps must be positive, got {}", self.fps)));
        }
        if !(self.mm_per_pixel.is_finite() && self.mm_per_pixel > 0.0) {
            return Err(Error::Argument(format!(
                "mm_per_pixel must be positive, got {}",
                self.mm_per_pixel
            )));
        }
        Ok(())
    }

    fn scene(&self, kind: SceneKind, load_n: f64) -> SceneSpec {
        SceneSpec {
            kind,
            load_n,
            mm_per_pixel: self.mm_per_pixel,
            width: self.width,
            height: self.height,
        }
    }

    fn stack(&self, clean: &Frame, material: &MaterialProfile, seed: u64) -> Result<FrameStack> {
        let frames = noisy_copies(clean, material.noise_sigma, self.frames_per_stack, seed)
            .iter()
            .map(Frame::quantized)
            .collect();
        FrameStack::new(frames, self.fps)
    }
}

/// The protocol as actually recorded, with any cycle override applied.
fn effective_protocol(protocol: &Protocol, options: &SimOptions) -> Protocol {
    let mut p = *protocol;
    if let Some(n) = options.cycles {
        match &mut p {
            Protocol::CyclicCompression(c)
            | Protocol::CyclicLocalShear(c)
            | Protocol::CyclicTransverseShear(c) => c.cycles = n,
            _ => {}
        }
    }
    p
}

/// Number of cycles a simulated run of `protocol` records under `options`.
pub fn recorded_cycles(protocol: &Protocol, options: &SimOptions) -> Result<u32> {
    cycle_count(&effective_protocol(protocol, options))
}

/// Number of recorded cycles: the protocol's cycles, or for abrasion a
/// baseline at 0 m plus one per increment.
fn cycle_count(protocol: &Protocol) -> Result<u32> {
    match protocol {
        Protocol::Abrasion(a) => {
            if !(a.increment_m > 0.0 && a.total_distance_m >= a.increment_m) {
                return Err(Error::Argument(format!(
                    "abrasion needs 0 < increment <= total distance, got {} and {}",
                    a.increment_m, a.total_distance_m
                )));
            }
            Ok(1 + a.increments().len() as u32)
        }
        p => match p.cyclic() {
            Some(c) if c.cycles > 0 => Ok(c.cycles),
            Some(_) => Err(Error::Argument("cycle count must be at least 1".into())),
            None => Err(Error::Argument(format!("{} runs are not cyclic", p.kind()))),
        },
    }
}

fn contact_scene(c: &CyclicLoading, options: &SimOptions) -> SceneKind {
    match c.contact {
        Contact::SphericalIndenter { tip_radius_mm } => SceneKind::Indenter {
            tip_radius_mm,
            x: options.width as f64 / 2.0 + c.lateral_load_n * SHEAR_MM_PER_N / options.mm_per_pixel,
            y: options.height as f64 / 2.0,
        },
        Contact::FlatPlate => SceneKind::Flat,
    }
}

/// Header of the run [`simulate_cycles`] and [`generate_run_with`] produce.
pub fn run_header(
    protocol: &Protocol,
    material: &MaterialProfile,
    wear: &[WearEvent],
    seed: u64,
    options: &SimOptions,
) -> RunHeader {
    let protocol = effective_protocol(protocol, options);
    RunHeader {
        protocol,
        material_label: material.name.clone(),
        sample_id: format!("sim-{seed}"),
        mm_per_pixel: Some(options.mm_per_pixel),
        fps: options.fps,
        truth: Some(GroundTruth {
            seed,
            material: material.clone(),
            wear_events: wear.to_vec(),
        }),
    }
}

/// Generates a resilience run cycle by cycle, handing each to `f` in order.
///
/// Cycle `c` draws its unloaded noise from `derive_seed(derive_seed(seed, c), 0)`
/// and its loaded noise from stream 1 of the same cycle seed, so cycles can be
/// produced in any order or in parallel with identical results.
pub fn simulate_cycles(
    protocol: &Protocol,
    material: &MaterialProfile,
    wear: &[WearEvent],
    seed: u64,
    options: &SimOptions,
    mut f: impl FnMut(CycleRecord) -> Result<()>,
) -> Result<()> {
    options.validate()?;
    material.validate()?;
    let protocol = effective_protocol(protocol, options);
    let n = cycle_count(&protocol)?;
    for e in wear {
        e.validate(n)?;
    }

    let unloaded_clean = illumination(options.width, options.height);
    let loaded_clean = protocol
        .cyclic()
        .map(|c| render_clean(&options.scene(contact_scene(c, options), c.normal_load_n), material))
        .transpose()?;
    let distances: Option<Vec<f64>> = match &protocol {
        Protocol::Abrasion(a) => Some(std::iter::once(0.0).chain(a.increments()).collect()),
        _ => None,
    };
    let sus = material.wear_susceptibility;

    let make = |c: u32| -> Result<CycleRecord> {
        let cycle_seed = derive_seed(seed, c as u64);
        let mut u = unloaded_clean.clone();
        apply_wear(&mut u, wear, &sus, c, n);
        let loaded = match &loaded_clean {
            Some(l) => {
                let mut l = l.clone();
                apply_wear(&mut l, wear, &sus, c, n);
                Some(options.stack(&l, material, derive_seed(cycle_seed, 1))?)
            }
            None => None,
        };
        Ok(CycleRecord {
            cycle_index: c,
            distance_m: distances.as_ref().map(|d| d[(c - 1) as usize]),
            unloaded: options.stack(&u, material, derive_seed(cycle_seed, 0))?,
            loaded,
        })
    };

    let chunk = (2 * rayon::current_num_threads()).max(1) as u32;
    let mut start = 1;
    while start <= n {
        let end = (start + chunk - 1).min(n);
        let batch = (start..=end)
            .into_par_iter()
            .map(make)
            .collect::<Result<Vec<_>>>()?;
        for c in batch {
            f(c)?;
        }
        start = end + 1;
    }
    Ok(())
}

/// Triangular load profile peaking at `max_force_n` halfway through `duration_s`.
fn triangle(t: f64, duration_s: f64, max_force_n: f64) -> f64 {
    max_force_n * (1.0 - (2.0 * t / duration_s - 1.0).abs())
}

/// A load/unload ramp on the indenter: timestamped frames and a force log
/// sampled [`FORCE_LOG_OVERSAMPLING`] times per frame interval.
///
/// Frame `i` is captured at `i / fps` under the true load; the log records
/// that load plus [`FORCE_NOISE_N`] of Gaussian noise on each axis.
pub fn generate_force_ramp(
    material: &MaterialProfile,
    max_force_n: f64,
    seed: u64,
    options: &SimOptions,
) -> Result<(FrameStack, Vec<LoadSample>)> {
    options.validate()?;
    if !(max_force_n.is_finite() && max_force_n > 0.0) {
        return Err(Error::Argument(format!("maximum force must be positive, got {max_force_n}")));
    }
    let n = options.ramp_frames;
    let duration = (n - 1) as f64 / options.fps;
    let indenter = SceneKind::Indenter {
        tip_radius_mm: INDENTER_TIP_RADIUS_MM,
        x: options.width as f64 / 2.0,
        y: options.height as f64 / 2.0,
    };
    let timestamps: Vec<f64> = (0..n).map(|i| i as f64 / options.fps).collect();
    let frames = timestamps
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let scene = options.scene(indenter, triangle(t, duration, max_force_n));
            let clean = render_clean(&scene, material)?;
            let mut noisy = noisy_copies(&clean, material.noise_sigma, 1, derive_seed(seed, i as u64));
            Ok(noisy.pop().expect("one frame").quantized())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, FORCE_STREAM));
    let noise = Normal::new(0.0, FORCE_NOISE_N).expect("valid deviation");
    let log_rate = options.fps * FORCE_LOG_OVERSAMPLING as f64;
    let forces = (0..=(n - 1) * FORCE_LOG_OVERSAMPLING)
        .map(|j| {
            let t = j as f64 / log_rate;
            LoadSample {
                timestamp: t,
                fx: noise.sample(&mut rng),
                fy: noise.sample(&mut rng),
                fz: triangle(t, duration, max_force_n) + noise.sample(&mut rng),
            }
        })
        .collect();
    Ok((FrameStack::with_timestamps(frames, options.fps, timestamps)?, forces))
}

/// One surface pressed at one load, plus the matching unloaded stack.
fn surface_data(
    surface: &SurfaceLoad,
    material: &MaterialProfile,
    seed: u64,
    options: &SimOptions,
) -> Result<RunData> {
    let kind = match surface.ridge {
        Some(ridge) => SceneKind::Ridged { ridge },
        None => SceneKind::Flat,
    };
    let loaded = render_clean(&options.scene(kind, surface.load_n), material)?;
    let unloaded = illumination(options.width, options.height);
    Ok(RunData::Surface {
        loaded: options.stack(&loaded, material, derive_seed(seed, 1))?,
        unloaded: options.stack(&unloaded, material, derive_seed(seed, 0))?,
    })
}

/// Simulates a complete run of `protocol` with default capture settings.
pub fn generate_run(
    protocol: &Protocol,
    material: &MaterialProfile,
    wear: &[WearEvent],
    seed: u64,
) -> Result<RunManifest> {
    generate_run_with(protocol, material, wear, seed, &SimOptions::for_protocol(protocol.kind()))
}

/// Simulates a complete run of `protocol`. Frames are quantized to 8 bits,
/// so saving and reloading the run is lossless.
pub fn generate_run_with(
    protocol: &Protocol,
    material: &MaterialProfile,
    wear: &[WearEvent],
    seed: u64,
    options: &SimOptions,
) -> Result<RunManifest> {
    options.validate()?;
    material.validate()?;
    let header = run_header(protocol, material, wear, seed, options);
    let data = match &header.protocol {
        p if p.kind().is_resilience() => {
            let mut cycles = Vec::new();
            simulate_cycles(p, material, wear, seed, options, |c| {
                cycles.push(c);
                Ok(())
            })?;
            RunData::Cycles(cycles)
        }
        other => {
            if !wear.is_empty() {
                return Err(Error::Argument(format!(
                    "wear events only apply to resilience protocols, not {}",
                    other.kind()
                )));
            }
            match other {
                Protocol::ForceSensitivity(r) => {
                    let (frames, forces) = generate_force_ramp(material, r.max_force_n, seed, options)?;
                    RunData::ForceRamp { frames, forces }
                }
                Protocol::SpatialSensitivity(s) => surface_data(s, material, seed, options)?,
                _ => unreachable!("resilience handled above"),
            }
        }
    };
    let run = RunManifest::from_parts(header, data);
    run.validate()?;
    Ok(run)
}

/// Every run of a sweep in generation order: per load, the flat surface
/// followed by each ridged surface of the plan.
pub fn sweep_surfaces(plan: &SweepPlan) -> Vec<SurfaceLoad> {
    let ridges: Vec<Option<RidgeSpec>> =
        std::iter::once(None).chain(plan.surfaces().into_iter().map(Some)).collect();
    plan.loads_n
        .iter()
        .flat_map(|&load_n| ridges.iter().map(move |&ridge| SurfaceLoad { load_n, ridge }))
        .collect()
}

/// Directory name for the `index`-th run of a sweep, sortable and descriptive.
pub fn sweep_run_name(index: usize, surface: &SurfaceLoad) -> String {
    match surface.ridge {
        None => format!("{index:03}_load{:.1}N_flat", surface.load_n),
        Some(r) => format!(
            "{index:03}_load{:.1}N_p{:.3}_a{:.4}",
            surface.load_n, r.period_mm, r.amplitude_mm
        ),
    }
}

/// Generates the `index`-th surface run of a sweep with seed stream `index`.
pub fn generate_sweep_run(
    surface: &SurfaceLoad,
    index: usize,
    material: &MaterialProfile,
    seed: u64,
    options: &SimOptions,
) -> Result<RunManifest> {
    let protocol = Protocol::SpatialSensitivity(*surface);
    let mut run = generate_run_with(&protocol, material, &[], derive_seed(seed, index as u64), options)?;
    run.sample_id = format!("sim-{seed}-{index:03}");
    if let Some(t) = &mut run.truth {
        t.seed = seed;
    }
    Ok(run)
}

/// All runs of a sweep held in memory. Prefer [`generate_sweep_run`] for
/// full-resolution sweeps, which are large.
pub fn generate_sweep(
    plan: &SweepPlan,
    material: &MaterialProfile,
    seed: u64,
    options: &SimOptions,
) -> Result<Vec<RunManifest>> {
    sweep_surfaces(plan)
        .iter()
        .enumerate()
        .map(|(i, s)| generate_sweep_run(s, i, material, seed, options))
        .collect()
}
