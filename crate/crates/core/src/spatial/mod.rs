//! Model-free spatial sensitivity.
//!
//! A ridged surface and a flat reference surface are each pressed at the
//! same load. For each, the averaged unloaded image is subtracted from the
//! averaged loaded image, band-pass filtered with a difference of Gaussians,
//! cropped, and reduced to an averaged power spectrum of mean-centred scan
//! lines running across the ridges. The ridged spectrum's power in the two
//! bins nearest the ridge frequency, over the flat spectrum's power in the
//! same bins, gives the SNR in decibels.

mod dog;
mod psd;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::fmt_f64;
use crate::model::{
    load_manifest, run_dirs, Frame, FrameStack, Protocol, RidgeOrientation, RidgeSpec, RunData,
    RunManifest,
};

pub use dog::{
    difference_of_gaussians, dog_peak_frequency, dog_transfer, gaussian_blur, gaussian_kernel,
};
pub use psd::{band_power, nearest_bins, scan_psd, SpectralResult, MIN_FFT_LENGTH};

/// Direction of the 1-D transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// Transform each image row (samples vary with x).
    Rows,
    /// Transform each image column (samples vary with y).
    Columns,
}

impl ScanAxis {
    /// The axis that cuts across ridges of the given orientation.
    pub fn across(orientation: RidgeOrientation) -> ScanAxis {
        match orientation {
            RidgeOrientation::Vertical => ScanAxis::Rows,
            RidgeOrientation::Horizontal => ScanAxis::Columns,
        }
    }
}

/// Pixel rectangle with top-left corner `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl CropRect {
    /// The central `fraction` of a `width`×`height` frame.
    pub fn centered(width: usize, height: usize, fraction: f64) -> CropRect {
        let cw = ((width as f64 * fraction).round() as usize).clamp(1, width);
        let ch = ((height as f64 * fraction).round() as usize).clamp(1, height);
        CropRect {
            x: (width - cw) / 2,
            y: (height - ch) / 2,
            width: cw,
            height: ch,
        }
    }
}

/// Parameters of the spatial pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Inner (narrow) Gaussian of the band-pass, pixels.
    pub dog_sigma_low: f64,
    /// Outer (wide) Gaussian of the band-pass, pixels.
    pub dog_sigma_high: f64,
    /// Analysis window; `None` selects the central 60% of the frame.
    pub crop: Option<CropRect>,
    /// Transform direction; `None` scans across the ridges.
    pub scan_axis: Option<ScanAxis>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dog_sigma_low: 2.0,
            dog_sigma_high: 12.0,
            crop: None,
            scan_axis: None,
        }
    }
}

impl PipelineConfig {
    pub const DEFAULT_CROP_FRACTION: f64 = 0.6;

    pub fn crop_for(&self, width: usize, height: usize) -> CropRect {
        self.crop
            .unwrap_or_else(|| CropRect::centered(width, height, Self::DEFAULT_CROP_FRACTION))
    }

    pub fn axis_for(&self, orientation: RidgeOrientation) -> ScanAxis {
        self.scan_axis.unwrap_or_else(|| ScanAxis::across(orientation))
    }

    /// Checks the configuration against a frame size and scan direction.
    pub fn validate(&self, width: usize, height: usize, axis: ScanAxis) -> Result<()> {
        if !(self.dog_sigma_low > 0.0 && self.dog_sigma_low < self.dog_sigma_high) {
            return Err(Error::Config(format!(
                "DoG sigmas must satisfy 0 < low < high, got {} and {}",
                self.dog_sigma_low, self.dog_sigma_high
            )));
        }
        let crop = self.crop_for(width, height);
        if crop.width == 0
            || crop.height == 0
            || crop.x + crop.width > width
            || crop.y + crop.height > height
        {
            return Err(Error::Config(format!(
                "crop {}x{}+{}+{} lies outside the {width}x{height} frame",
                crop.width, crop.height, crop.x, crop.y
            )));
        }
        let length = match axis {
            ScanAxis::Rows => crop.width,
            ScanAxis::Columns => crop.height,
        };
        if length < MIN_FFT_LENGTH {
            return Err(Error::Config(format!(
                "crop gives {length}-sample scan lines; at least {MIN_FFT_LENGTH} are needed"
            )));
        }
        Ok(())
    }
}

/// Signed per-pixel difference `loaded - unloaded`, unclamped.
pub fn background_subtract(loaded: &Frame, unloaded: &Frame) -> Result<Frame> {
    loaded.ensure_same_dims(unloaded, "background subtraction")?;
    let data = loaded
        .samples()
        .iter()
        .zip(unloaded.samples())
        .map(|(a, b)| a - b)
        .collect();
    Frame::new(loaded.width(), loaded.height(), data)
}

/// `mean(loaded) - mean(unloaded)` computed in one pass.
///
/// Every frame is first referenced to the first unloaded frame, so a
/// constant added to both stacks cancels before any rounding happens: for
/// integer-valued frames the result is then bit-identical.
pub fn stack_difference(loaded: &FrameStack, unloaded: &FrameStack) -> Result<Frame> {
    let pivot_frame = &unloaded.frames()[0];
    let pivot = pivot_frame.samples();
    let accumulate = |stack: &FrameStack| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; pivot.len()];
        for f in stack.frames() {
            pivot_frame.ensure_same_dims(f, "background subtraction")?;
            for ((a, &v), &p) in acc.iter_mut().zip(f.samples()).zip(pivot) {
                *a += v - p;
            }
        }
        Ok(acc)
    };
    let (l, u) = (accumulate(loaded)?, accumulate(unloaded)?);
    let (nl, nu) = (loaded.len() as f64, unloaded.len() as f64);
    let data = l.iter().zip(&u).map(|(a, b)| a / nl - b / nu).collect();
    Frame::new(pivot_frame.width(), pivot_frame.height(), data)
}

/// Band-pass filters `img` with the configured difference of Gaussians.
pub fn bandpass_dog(img: &Frame, config: &PipelineConfig) -> Result<Frame> {
    difference_of_gaussians(img, config.dog_sigma_low, config.dog_sigma_high)
}

/// Averaged scan-line power spectrum of an already cropped image, scanning
/// along `config.scan_axis` (rows if unset).
pub fn row_psd(img: &Frame, config: &PipelineConfig, mm_per_pixel: f64) -> Result<SpectralResult> {
    scan_psd(img, config.scan_axis.unwrap_or(ScanAxis::Rows), mm_per_pixel)
}

/// Subtract, filter, crop, and transform one surface's stacks.
pub fn surface_spectrum(
    loaded: &FrameStack,
    unloaded: &FrameStack,
    config: &PipelineConfig,
    axis: ScanAxis,
    mm_per_pixel: f64,
) -> Result<SpectralResult> {
    let (w, h) = loaded.dims();
    config.validate(w, h, axis)?;
    let delta = stack_difference(loaded, unloaded)?;
    let filtered = bandpass_dog(&delta, config)?;
    let crop = config.crop_for(w, h);
    let cropped = filtered.crop(crop.x, crop.y, crop.width, crop.height)?;
    scan_psd(&cropped, axis, mm_per_pixel)
}

/// `10·log10(p_signal / p_noise)`.
///
/// Returns `Some(+inf)` for a zero noise power, `Some(-inf)` for a zero
/// signal power, and `None` when both are zero.
pub fn snr_db(p_signal: f64, p_noise: f64) -> Result<Option<f64>> {
    if !(p_signal >= 0.0 && p_noise >= 0.0) {
        return Err(Error::Argument(format!(
            "powers must be non-negative, got signal {p_signal} and noise {p_noise}"
        )));
    }
    Ok(match (p_signal == 0.0, p_noise == 0.0) {
        (true, true) => None,
        (false, true) => Some(f64::INFINITY),
        (true, false) => Some(f64::NEG_INFINITY),
        (false, false) => Some(10.0 * (p_signal / p_noise).log10()),
    })
}

/// Text form of an SNR value: shortest decimal, `inf`, `-inf`, or empty when undefined.
pub fn format_db(value: Option<f64>) -> String {
    match value {
        None => String::new(),
        Some(v) if v == f64::INFINITY => "inf".into(),
        Some(v) if v == f64::NEG_INFINITY => "-inf".into(),
        Some(v) => fmt_f64(v),
    }
}

mod db_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            Some(x) => s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" }),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(match Option::<Repr>::deserialize(d)? {
            None => None,
            Some(Repr::Num(x)) => Some(x),
            Some(Repr::Text(t)) if t == "inf" => Some(f64::INFINITY),
            Some(Repr::Text(t)) if t == "-inf" => Some(f64::NEG_INFINITY),
            Some(Repr::Text(t)) => {
                return Err(serde::de::Error::custom(format!("invalid SNR value {t:?}")))
            }
        })
    }
}

/// SNR of one ridged surface at one load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrRecord {
    pub ridge: RidgeSpec,
    pub load_n: f64,
    pub p_signal: f64,
    pub p_noise: f64,
    /// `None` when both powers are zero; infinite values serialize as `"inf"`/`"-inf"`.
    #[serde(with = "db_serde")]
    pub snr_db: Option<f64>,
}

fn check_ridge_frequency(ridge: &RidgeSpec, mm_per_pixel: f64) -> Result<()> {
    ridge.validate()?;
    let nyquist = 1.0 / (2.0 * mm_per_pixel);
    if ridge.frequency() > nyquist {
        return Err(Error::Config(format!(
            "ridge frequency {} cycles/mm (period {} mm) exceeds the Nyquist frequency {nyquist} cycles/mm at {mm_per_pixel} mm/pixel",
            ridge.frequency(),
            ridge.period_mm
        )));
    }
    Ok(())
}

fn record_from_spectra(
    ridged: &SpectralResult,
    flat: &SpectralResult,
    ridge: RidgeSpec,
    load_n: f64,
) -> Result<SnrRecord> {
    let f = ridge.frequency();
    let p_signal = band_power(ridged, f)?;
    let p_noise = band_power(flat, f)?;
    Ok(SnrRecord {
        ridge,
        load_n,
        p_signal,
        p_noise,
        snr_db: snr_db(p_signal, p_noise)?,
    })
}

/// Runs the full pipeline on a ridged surface and its flat reference at the same load.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_surface(
    loaded: &FrameStack,
    unloaded: &FrameStack,
    flat_loaded: &FrameStack,
    flat_unloaded: &FrameStack,
    ridge: RidgeSpec,
    load_n: f64,
    config: &PipelineConfig,
    mm_per_pixel: f64,
) -> Result<SnrRecord> {
    if !(mm_per_pixel.is_finite() && mm_per_pixel > 0.0) {
        return Err(Error::Config(format!("mm_per_pixel must be positive, got {mm_per_pixel}")));
    }
    check_ridge_frequency(&ridge, mm_per_pixel)?;
    let axis = config.axis_for(ridge.orientation);
    let ridged = surface_spectrum(loaded, unloaded, config, axis, mm_per_pixel)?;
    let flat = surface_spectrum(flat_loaded, flat_unloaded, config, axis, mm_per_pixel)?;
    record_from_spectra(&ridged, &flat, ridge, load_n)
}

/// A surface run reduced to what the sweep needs.
enum Reduced {
    /// Filtered, cropped difference image; its spectrum depends on the scan axis.
    Flat {
        load_n: f64,
        mm_per_pixel: f64,
        filtered: Frame,
    },
    Ridged {
        load_n: f64,
        mm_per_pixel: f64,
        ridge: RidgeSpec,
        spectrum: SpectralResult,
    },
}

fn reduce(run: &RunManifest, config: &PipelineConfig) -> Result<Reduced> {
    let (Protocol::SpatialSensitivity(p), RunData::Surface { loaded, unloaded }) =
        (&run.protocol, &run.data)
    else {
        return Err(Error::Validation(format!(
            "sweep expects spatial_sensitivity runs, got {}",
            run.kind()
        )));
    };
    let mm_per_pixel = run
        .mm_per_pixel
        .ok_or_else(|| Error::schema("mm_per_pixel", "required for spatial_sensitivity runs"))?;
    let (w, h) = loaded.dims();
    match p.ridge {
        Some(ridge) => {
            check_ridge_frequency(&ridge, mm_per_pixel)?;
            let axis = config.axis_for(ridge.orientation);
            Ok(Reduced::Ridged {
                load_n: p.load_n,
                mm_per_pixel,
                ridge,
                spectrum: surface_spectrum(loaded, unloaded, config, axis, mm_per_pixel)?,
            })
        }
        None => {
            // The scan axis is only known once a ridged run asks for this flat.
            config
                .validate(w, h, ScanAxis::Rows)
                .or_else(|_| config.validate(w, h, ScanAxis::Columns))?;
            let filtered = bandpass_dog(&stack_difference(loaded, unloaded)?, config)?;
            let crop = config.crop_for(w, h);
            Ok(Reduced::Flat {
                load_n: p.load_n,
                mm_per_pixel,
                filtered: filtered.crop(crop.x, crop.y, crop.width, crop.height)?,
            })
        }
    }
}

fn combine(reduced: Vec<Reduced>, config: &PipelineConfig) -> Result<Vec<SnrRecord>> {
    let mut flats: BTreeMap<u64, (f64, Frame)> = BTreeMap::new();
    let mut ridged = Vec::new();
    for r in reduced {
        match r {
            Reduced::Flat { load_n, mm_per_pixel, filtered } => {
                if flats.insert(load_n.to_bits(), (mm_per_pixel, filtered)).is_some() {
                    return Err(Error::Validation(format!(
                        "more than one flat-surface run at {load_n} N"
                    )));
                }
            }
            Reduced::Ridged { load_n, mm_per_pixel, ridge, spectrum } => {
                ridged.push((load_n, mm_per_pixel, ridge, spectrum))
            }
        }
    }

    // Flat spectra depend on the scan axis, so compute them per (load, axis).
    let mut flat_spectra: BTreeMap<(u64, bool), SpectralResult> = BTreeMap::new();
    let mut records = Vec::with_capacity(ridged.len());
    for (load_n, mm_per_pixel, ridge, spectrum) in ridged {
        let (flat_mmpp, flat) = flats
            .get(&load_n.to_bits())
            .ok_or_else(|| Error::Validation(format!("no flat-surface run at {load_n} N load")))?;
        if *flat_mmpp != mm_per_pixel {
            return Err(Error::Validation(format!(
                "flat run at {load_n} N uses {flat_mmpp} mm/pixel but a ridged run uses {mm_per_pixel}"
            )));
        }
        let axis = config.axis_for(ridge.orientation);
        let key = (load_n.to_bits(), axis == ScanAxis::Columns);
        let flat_spec = match flat_spectra.entry(key) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(scan_psd(flat, axis, mm_per_pixel)?)
            }
        };
        records.push(record_from_spectra(&spectrum, flat_spec, ridge, load_n)?);
    }

    records.sort_by(|a, b| {
        a.load_n
            .total_cmp(&b.load_n)
            .then(a.ridge.period_mm.total_cmp(&b.ridge.period_mm))
            .then(a.ridge.amplitude_mm.total_cmp(&b.ridge.amplitude_mm))
    });
    Ok(records)
}

/// Evaluates every ridged run against the flat run recorded at the same load.
///
/// Surfaces are processed in parallel; records come back ordered by load,
/// then period, then amplitude (input order among equal keys).
pub fn sweep(runs: &[RunManifest], config: &PipelineConfig) -> Result<Vec<SnrRecord>> {
    let reduced = runs
        .par_iter()
        .map(|r| reduce(r, config))
        .collect::<Result<Vec<_>>>()?;
    combine(reduced, config)
}

/// [`sweep`] over the run directories below `dir`, loading one run at a time.
pub fn sweep_dir(dir: impl AsRef<Path>, config: &PipelineConfig) -> Result<Vec<SnrRecord>> {
    let dirs = run_dirs(dir)?;
    let mut reduced = Vec::with_capacity(dirs.len());
    for d in &dirs {
        reduced.push(reduce(&load_manifest(d)?, config)?);
    }
    combine(reduced, config)
}

/// Writes `period_mm,amplitude_mm,load_n,p_signal,p_noise,snr_db`.
pub fn write_snr_csv<W: Write>(records: &[SnrRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Validation(format!("CSV export failed: {e}"));
    w.write_record(["period_mm", "amplitude_mm", "load_n", "p_signal", "p_noise", "snr_db"])
        .map_err(err)?;
    for r in records {
        w.write_record([
            fmt_f64(r.ridge.period_mm),
            fmt_f64(r.ridge.amplitude_mm),
            fmt_f64(r.load_n),
            fmt_f64(r.p_signal),
            fmt_f64(r.p_noise),
            format_db(r.snr_db),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Validation(format!("CSV export failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subtraction_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Frame::from_fn(7, 5, |_, _, _| rng.random_range(0.0..255.0)).unwrap();
        let p = Frame::from_fn(7, 5, |x, y, c| (x as f64 - y as f64) * (c as f64 + 1.0)).unwrap();
        let l = Frame::from_fn(7, 5, |x, y, c| u.get(x, y, c) + p.get(x, y, c)).unwrap();
        assert!(background_subtract(&u, &u).unwrap().samples().iter().all(|&v| v == 0.0));
        let d = background_subtract(&l, &u).unwrap();
        for y in 0..5 {
            for x in 0..7 {
                for c in 0..3 {
                    assert_eq!(d.get(x, y, c), l.get(x, y, c) - u.get(x, y, c));
                    assert!((d.get(x, y, c) - p.get(x, y, c)).abs() < 1e-12);
                }
            }
        }
        let small = Frame::filled(6, 5, 0.0).unwrap();
        assert!(background_subtract(&small, &u).is_err());
    }

    #[test]
    fn stack_difference_matches_average_then_subtract() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut stack = |n| {
            let frames = (0..n)
                .map(|_| Frame::from_fn(6, 4, |_, _, _| rng.random_range(0.0..255.0)).unwrap())
                .collect();
            FrameStack::new(frames, 30.0).unwrap()
        };
        let (l, u) = (stack(5), stack(3));
        let direct = stack_difference(&l, &u).unwrap();
        let avg = crate::metrics::average_frames;
        let reference = background_subtract(&avg(&l).unwrap(), &avg(&u).unwrap()).unwrap();
        for (a, b) in direct.samples().iter().zip(reference.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn snr_algebra() {
        assert_eq!(snr_db(3.0, 3.0).unwrap(), Some(0.0));
        assert_eq!(snr_db(100.0, 1.0).unwrap(), Some(20.0));
        assert_eq!(snr_db(0.0, 2.0).unwrap(), Some(f64::NEG_INFINITY));
        assert_eq!(snr_db(2.0, 0.0).unwrap(), Some(f64::INFINITY));
        assert_eq!(snr_db(0.0, 0.0).unwrap(), None);
        assert!(snr_db(-1.0, 1.0).is_err());
        assert!(snr_db(1.0, f64::NAN).is_err());
        assert_eq!(format_db(Some(f64::NEG_INFINITY)), "-inf");
        assert_eq!(format_db(None), "");
    }

    #[test]
    fn snr_record_json_sentinels() {
        let ridge = RidgeSpec::new(1.5, 0.05, RidgeOrientation::Vertical).unwrap();
        for snr in [Some(f64::NEG_INFINITY), Some(f64::INFINITY), None, Some(12.5)] {
            let r = SnrRecord { ridge, load_n: 2.0, p_signal: 0.0, p_noise: 1.0, snr_db: snr };
            let text = serde_json::to_string(&r).unwrap();
            let back: SnrRecord = serde_json::from_str(&text).unwrap();
            assert_eq!(back.snr_db, snr, "{text}");
        }
        let r = SnrRecord { ridge, load_n: 2.0, p_signal: 0.0, p_noise: 1.0, snr_db: Some(f64::NEG_INFINITY) };
        assert!(serde_json::to_string(&r).unwrap().contains("\"snr_db\":\"-inf\""));
    }

    #[test]
    fn default_crop_is_central_sixty_percent() {
        let c = PipelineConfig::default().crop_for(640, 480);
        assert_eq!(c, CropRect { x: 128, y: 96, width: 384, height: 288 });
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        cfg.validate(640, 480, ScanAxis::Rows).unwrap();
        cfg.crop = Some(CropRect { x: 600, y: 0, width: 100, height: 10 });
        assert!(cfg.validate(640, 480, ScanAxis::Rows).is_err());
        cfg.crop = Some(CropRect { x: 0, y: 0, width: 15, height: 100 });
        assert!(cfg.validate(640, 480, ScanAxis::Rows).is_err());
        assert!(cfg.validate(640, 480, ScanAxis::Columns).is_ok());
        let cfg = PipelineConfig { dog_sigma_low: 5.0, dog_sigma_high: 4.0, ..Default::default() };
        assert!(cfg.validate(640, 480, ScanAxis::Rows).is_err());
    }

    #[test]
    fn axis_runs_across_ridges() {
        assert_eq!(ScanAxis::across(RidgeOrientation::Vertical), ScanAxis::Rows);
        assert_eq!(ScanAxis::across(RidgeOrientation::Horizontal), ScanAxis::Columns);
    }

    #[test]
    fn empty_sweep_is_empty() {
        assert!(sweep(&[], &PipelineConfig::default()).unwrap().is_empty());
    }
}
