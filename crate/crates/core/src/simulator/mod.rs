//! Synthetic sensor frames with known ground truth.
//!
//! The optical model is intensity-additive: a smooth illumination field,
//! plus a contact signal scaled by the material's load response, plus white
//! Gaussian noise. It is not a photometric or mechanical model of a gel, and
//! its constants are not measurements; it exists so every analysis can be
//! checked against inputs whose answer is known.
//!
//! # Seeding
//!
//! Every random draw comes from ChaCha8 seeded through
//! `rand_core::SeedableRng::seed_from_u64`. Independent streams are derived
//! with [`derive_seed`], a SplitMix64 mix of `(seed, stream)`, so any
//! implementation with ChaCha8 and SplitMix64 can reproduce the frames.

mod runs;
mod wear;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frame, FrameStack, RidgeOrientation, RidgeSpec, CHANNELS};

pub use runs::{
    generate_force_ramp, generate_run, generate_run_with, generate_sweep, generate_sweep_run,
    recorded_cycles, run_header, simulate_cycles, sweep_run_name, sweep_surfaces, GroundTruth, SimOptions,
    FORCE_LOG_OVERSAMPLING, FORCE_NOISE_N,
};
pub use wear::{Growth, WearEvent, WearMode};

/// Calibration used for simulated 320×240 frames.
pub const QVGA_MM_PER_PIXEL: f64 = 0.0625;
/// Calibration used for simulated 640×480 frames.
pub const VGA_MM_PER_PIXEL: f64 = 0.03125;

/// Indentation depth (mm) of the indenter blob per unit of load response.
const INDENTER_DEPTH_MM: f64 = 0.3;
/// Uniform bulk deformation (mm) per unit of load response for whole-face contact.
const BULK_DEPTH_MM: f64 = 0.05;
/// Relative response of the R, G, B channels to contact.
const CHANNEL_WEIGHTS: [f64; CHANNELS] = [1.0, 0.75, -0.6];

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `seed`: `splitmix64(seed ^ splitmix64(stream))`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// How image change grows with normal load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Linear,
    /// Slope drops to `post_knee_fraction` above `knee_n`.
    Saturating { knee_n: f64, post_knee_fraction: f64 },
}

impl Response {
    /// Effective load (N) after the material's response curve.
    pub fn apply(&self, load_n: f64) -> f64 {
        let load = load_n.max(0.0);
        match *self {
            Response::Linear => load,
            Response::Saturating {
                knee_n,
                post_knee_fraction,
            } => {
                if load <= knee_n {
                    load
                } else {
                    knee_n + post_knee_fraction * (load - knee_n)
                }
            }
        }
    }
}

/// Per-mode multipliers on wear severity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WearSusceptibility {
    pub puncture: f64,
    pub tear: f64,
    pub delamination: f64,
    pub abrasion: f64,
}

/// Parametric stand-in for a gel material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProfile {
    pub name: String,
    /// Intensity units per mm of deformation per newton of effective load.
    pub gain: f64,
    pub response: Response,
    /// Per-frame white noise, intensity units.
    pub noise_sigma: f64,
    /// Deepest ridge the gel conforms to; deeper ridges register as
    /// `limit · tanh(amplitude / limit)`.
    pub ridge_depth_limit_mm: f64,
    pub wear_susceptibility: WearSusceptibility,
}

impl MaterialProfile {
    pub const PRESETS: [&'static str; 2] = ["si_like", "pu_like"];

    /// Soft, sensitive gel that saturates above 10 N.
    pub fn si_like() -> Self {
        Self {
            name: "SI".into(),
            gain: 16.0,
            response: Response::Saturating {
                knee_n: 10.0,
                post_knee_fraction: 0.1,
            },
            noise_sigma: 2.0,
            ridge_depth_limit_mm: 0.03,
            wear_susceptibility: WearSusceptibility {
                puncture: 1.0,
                tear: 1.0,
                delamination: 1.0,
                abrasion: 1.0,
            },
        }
    }

    /// Tougher gel with lower, linear sensitivity.
    pub fn pu_like() -> Self {
        Self {
            name: "PU".into(),
            gain: 8.0,
            response: Response::Linear,
            noise_sigma: 2.0,
            ridge_depth_limit_mm: 0.04,
            wear_susceptibility: WearSusceptibility {
                puncture: 0.2,
                tear: 0.2,
                delamination: 0.0,
                abrasion: 0.3,
            },
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "si_like" => Some(Self::si_like()),
            "pu_like" => Some(Self::pu_like()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::Argument(format!("material gain must be positive, got {}", self.gain)));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Argument(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.ridge_depth_limit_mm.is_nan() || self.ridge_depth_limit_mm <= 0.0 {
            return Err(Error::Argument("ridge depth limit must be positive".into()));
        }
        if let Response::Saturating {
            knee_n,
            post_knee_fraction,
        } = self.response
        {
            if !(0.0..=1.0).contains(&post_knee_fraction) || knee_n.is_nan() || knee_n < 0.0 {
                return Err(Error::Argument(format!(
                    "saturating response needs knee >= 0 and post-knee fraction in [0, 1], got {knee_n}, {post_knee_fraction}"
                )));
            }
        }
        Ok(())
    }

    /// Registered ridge depth for a surface of the given amplitude.
    pub fn effective_ridge_depth(&self, amplitude_mm: f64) -> f64 {
        self.ridge_depth_limit_mm * (amplitude_mm / self.ridge_depth_limit_mm).tanh()
    }

    /// Peak intensity of the ridge sinusoid at a given load.
    pub fn ridge_intensity(&self, ridge: &RidgeSpec, load_n: f64) -> f64 {
        self.gain * self.response.apply(load_n) * self.effective_ridge_depth(ridge.amplitude_mm)
    }
}

/// What the sensor is pressed against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SceneKind {
    /// Whole-face contact with a flat surface (no contact at zero load).
    Flat,
    /// Whole-face contact with a ridged surface.
    Ridged { ridge: RidgeSpec },
    /// Spherical indenter centred at pixel `(x, y)`.
    Indenter { tip_radius_mm: f64, x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub load_n: f64,
    pub mm_per_pixel: f64,
    pub width: usize,
    pub height: usize,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Argument("scene resolution must be positive".into()));
        }
        if !(self.mm_per_pixel.is_finite() && self.mm_per_pixel > 0.0) {
            return Err(Error::Argument(format!(
                "mm_per_pixel must be positive, got {}",
                self.mm_per_pixel
            )));
        }
        if let SceneKind::Ridged { ridge } = &self.kind {
            ridge.validate()?;
            if ridge.period_mm < 2.0 * self.mm_per_pixel {
                return Err(Error::Argument(format!(
                    "ridge period {} mm is below the sampling limit of {} mm (2 pixels)",
                    ridge.period_mm,
                    2.0 * self.mm_per_pixel
                )));
            }
        }
        Ok(())
    }
}

/// Cosine taper: 1 up to `start`, 0 from `end` on.
fn taper(r: f64, start: f64, end: f64) -> f64 {
    if r <= start {
        1.0
    } else if r >= end {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - start) / (end - start)).cos())
    }
}

/// Whole-face contact footprint: flat across the centre, tapering to zero near the gel edges.
fn contact_mask(x: usize, y: usize, w: usize, h: usize) -> f64 {
    let u = (x as f64 + 0.5) / w as f64 * 2.0 - 1.0;
    let v = (y as f64 + 0.5) / h as f64 * 2.0 - 1.0;
    taper(u.abs(), 0.8, 0.98) * taper(v.abs(), 0.8, 0.98)
}

/// Smooth, channel-tinted illumination with mild vignetting.
pub fn illumination(width: usize, height: usize) -> Frame {
    const BASE: [f64; CHANNELS] = [118.0, 126.0, 134.0];
    const TILT_X: [f64; CHANNELS] = [18.0, -6.0, -14.0];
    const TILT_Y: [f64; CHANNELS] = [-10.0, 12.0, 4.0];
    Frame::from_fn(width, height, |x, y, c| {
        let u = (x as f64 + 0.5) / width as f64 - 0.5;
        let v = (y as f64 + 0.5) / height as f64 - 0.5;
        BASE[c] + TILT_X[c] * u + TILT_Y[c] * v - 30.0 * (u * u + v * v)
    })
    .expect("positive dimensions")
}

/// The noiseless image of a scene.
pub fn render_clean(scene: &SceneSpec, material: &MaterialProfile) -> Result<Frame> {
    scene.validate()?;
    material.validate()?;
    let (w, h) = (scene.width, scene.height);
    let mut frame = illumination(w, h);
    let load = material.response.apply(scene.load_n);
    if load == 0.0 {
        return Ok(frame);
    }
    match scene.kind {
        SceneKind::Flat | SceneKind::Ridged { .. } => {
            let bulk = material.gain * load * BULK_DEPTH_MM;
            let ridge = match scene.kind {
                SceneKind::Ridged { ridge } => Some((ridge, material.ridge_intensity(&ridge, scene.load_n))),
                _ => None,
            };
            let k = 2.0 * std::f64::consts::PI * scene.mm_per_pixel;
            for y in 0..h {
                for x in 0..w {
                    let m = contact_mask(x, y, w, h);
                    if m == 0.0 {
                        continue;
                    }
                    let mut s = bulk;
                    if let Some((r, amp)) = ridge {
                        let pos = match r.orientation {
                            RidgeOrientation::Vertical => x,
                            RidgeOrientation::Horizontal => y,
                        } as f64;
                        s += amp * (k * pos / r.period_mm).sin();
                    }
                    for (c, wgt) in CHANNEL_WEIGHTS.iter().enumerate() {
                        let v = frame.get(x, y, c) + wgt * m * s;
                        frame.set(x, y, c, v);
                    }
                }
            }
        }
        SceneKind::Indenter { tip_radius_mm, x: cx, y: cy } => {
            let peak = material.gain * load * INDENTER_DEPTH_MM;
            let sigma = 0.5 * tip_radius_mm / scene.mm_per_pixel;
            let reach = (4.0 * sigma).ceil() as i64;
            let (x0, x1) = ((cx as i64 - reach).max(0), (cx as i64 + reach).min(w as i64 - 1));
            let (y0, y1) = ((cy as i64 - reach).max(0), (cy as i64 + reach).min(h as i64 - 1));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    let s = peak * (-d2 / (2.0 * sigma * sigma)).exp();
                    for (c, wgt) in CHANNEL_WEIGHTS.iter().enumerate() {
                        let (xu, yu) = (x as usize, y as usize);
                        let v = frame.get(xu, yu, c) + wgt * s;
                        frame.set(xu, yu, c, v);
                    }
                }
            }
        }
    }
    Ok(frame)
}

/// Adds white Gaussian noise drawn from ChaCha8 seeded with `seed`, in sample order.
pub(crate) fn add_noise(frame: &mut Frame, sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in frame.samples_mut() {
        let n: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * n;
    }
}

/// One noisy frame of `scene`. Values are real and unclamped.
pub fn render(scene: &SceneSpec, material: &MaterialProfile, seed: u64) -> Result<Frame> {
    let mut frame = render_clean(scene, material)?;
    add_noise(&mut frame, material.noise_sigma, seed);
    Ok(frame)
}

/// `n_frames` noise draws over one fixed scene; frame `i` equals
/// `render(scene, material, derive_seed(seed, i))`.
pub fn render_stack(
    scene: &SceneSpec,
    material: &MaterialProfile,
    n_frames: usize,
    seed: u64,
) -> Result<FrameStack> {
    if n_frames == 0 {
        return Err(Error::Argument("a stack needs at least one frame".into()));
    }
    let clean = render_clean(scene, material)?;
    FrameStack::new(noisy_copies(&clean, material.noise_sigma, n_frames, seed), 30.0)
}

pub(crate) fn noisy_copies(clean: &Frame, sigma: f64, n: usize, seed: u64) -> Vec<Frame> {
    (0..n as u64)
        .map(|i| {
            let mut f = clean.clone();
            add_noise(&mut f, sigma, derive_seed(seed, i));
            f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::average_frames;
    use crate::spatial::{scan_psd, ScanAxis};

    fn scene(kind: SceneKind) -> SceneSpec {
        SceneSpec { kind, load_n: 2.0, mm_per_pixel: VGA_MM_PER_PIXEL, width: 160, height: 120 }
    }

    #[test]
    fn flat_noiseless_is_illumination() {
        let mat = MaterialProfile { noise_sigma: 0.0, ..MaterialProfile::si_like() };
        let s = SceneSpec { load_n: 0.0, ..scene(SceneKind::Flat) };
        for seed in [0, 1, 99] {
            assert_eq!(render(&s, &mat, seed).unwrap(), illumination(160, 120));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let mat = MaterialProfile::si_like();
        let s = scene(SceneKind::Flat);
        assert_eq!(render(&s, &mat, 7).unwrap(), render(&s, &mat, 7).unwrap());
        assert_ne!(render(&s, &mat, 7).unwrap(), render(&s, &mat, 8).unwrap());
    }

    #[test]
    fn stack_frames_use_derived_seeds() {
        let mat = MaterialProfile::pu_like();
        let s = scene(SceneKind::Flat);
        let stack = render_stack(&s, &mat, 1, 42).unwrap();
        assert_eq!(stack.frames()[0], render(&s, &mat, derive_seed(42, 0)).unwrap());
        let other = render_stack(&s, &mat, 1, 43).unwrap();
        assert_ne!(stack, other);
        assert!(render_stack(&s, &mat, 0, 42).is_err());
    }

    #[test]
    fn stack_average_converges_to_clean_render() {
        let mat = MaterialProfile::si_like();
        let s = SceneSpec { width: 24, height: 16, ..scene(SceneKind::Flat) };
        let stack = render_stack(&s, &mat, 100, 3).unwrap();
        let avg = average_frames(&stack).unwrap();
        let clean = render_clean(&s, &mat).unwrap();
        let bound = 3.0 * mat.noise_sigma / 10.0;
        let within = avg
            .samples()
            .iter()
            .zip(clean.samples())
            .filter(|(a, b)| (*a - *b).abs() <= bound)
            .count();
        // 3-sigma bound: expect ~99.7% of samples inside.
        assert!(within as f64 >= 0.99 * avg.samples().len() as f64, "{within}");
    }

    #[test]
    fn ridged_row_spectrum_peaks_at_ridge_frequency() {
        let mat = MaterialProfile { noise_sigma: 0.0, ..MaterialProfile::si_like() };
        let ridge = RidgeSpec::new(1.0, 0.05, RidgeOrientation::Vertical).unwrap();
        let s = SceneSpec { width: 256, height: 64, ..scene(SceneKind::Ridged { ridge }) };
        let img = render(&s, &mat, 0).unwrap();
        let flat = illumination(256, 64);
        let diff = Frame::from_fn(256, 1, |x, _, c| img.get(x, 32, c) - flat.get(x, 32, c)).unwrap();
        let row = diff;
        let spec = scan_psd(&row, ScanAxis::Rows, s.mm_per_pixel).unwrap();
        let peak = (1..spec.psd.len())
            .max_by(|&a, &b| spec.psd[a].total_cmp(&spec.psd[b]))
            .unwrap();
        let expected = (ridge.frequency() / spec.resolution()).round() as usize;
        assert_eq!(peak, expected);
    }

    #[test]
    fn ridge_below_two_pixels_is_rejected() {
        let ridge = RidgeSpec::new(0.05, 0.01, RidgeOrientation::Vertical).unwrap();
        let s = scene(SceneKind::Ridged { ridge });
        assert!(render(&s, &MaterialProfile::si_like(), 0).is_err());
    }

    #[test]
    fn saturating_response() {
        let r = MaterialProfile::si_like().response;
        assert_eq!(r.apply(5.0), 5.0);
        assert_eq!(r.apply(30.0), 12.0);
        assert_eq!(Response::Linear.apply(30.0), 30.0);
    }

    #[test]
    fn seed_derivation_is_stable() {
        // Frozen so other implementations can check their derivation.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
