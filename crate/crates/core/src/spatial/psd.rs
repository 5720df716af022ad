use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::ScanAxis;
use crate::error::{Error, Result};
use crate::model::{Frame, CHANNELS};

/// Shortest scan line accepted for spectral analysis.
pub const MIN_FFT_LENGTH: usize = 16;

/// Relative distance from a bin centre below which a target counts as exactly on the bin.
const EXACT_BIN_TOLERANCE: f64 = 1e-9;

/// Averaged one-sided power spectrum of mean-centred scan lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// `fft_length / 2 + 1` non-negative powers.
    pub psd: Vec<f64>,
    /// Bin centres in cycles/mm.
    pub bin_freqs: Vec<f64>,
    pub fft_length: usize,
    pub rows_averaged: usize,
    pub channels_averaged: usize,
}

impl SpectralResult {
    /// Bin spacing in cycles/mm.
    pub fn resolution(&self) -> f64 {
        self.bin_freqs[1]
    }

    /// Highest representable frequency, cycles/mm.
    pub fn nyquist(&self) -> f64 {
        self.resolution() * self.fft_length as f64 / 2.0
    }

    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum()
    }
}

/// One-sided power of a single real line: `|X_k|² / N`, with every bin that
/// has a mirrored negative-frequency partner doubled.
///
/// Under this convention the bins sum to the line's sum of squares.
pub(crate) fn one_sided_power(spectrum: &[Complex<f64>]) -> impl Iterator<Item = f64> + '_ {
    let n = spectrum.len();
    (0..=n / 2).map(move |k| {
        let p = spectrum[k].norm_sqr() / n as f64;
        if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            p
        } else {
            2.0 * p
        }
    })
}

/// Power spectrum averaged over every scan line and channel of `img`.
///
/// Each line is mean-centred and transformed at its natural length (no
/// window, no zero padding). `img` is expected to be cropped already.
pub fn scan_psd(img: &Frame, axis: ScanAxis, mm_per_pixel: f64) -> Result<SpectralResult> {
    if !(mm_per_pixel.is_finite() && mm_per_pixel > 0.0) {
        return Err(Error::Argument(format!(
            "mm_per_pixel must be positive, got {mm_per_pixel}"
        )));
    }
    let (w, h) = img.dims();
    let (n, lines) = match axis {
        ScanAxis::Rows => (w, h),
        ScanAxis::Columns => (h, w),
    };
    if n < MIN_FFT_LENGTH {
        return Err(Error::Argument(format!(
            "scan lines of {n} samples are shorter than the minimum of {MIN_FFT_LENGTH}"
        )));
    }

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex::default(); n];
    let mut acc = vec![0.0; n / 2 + 1];

    for line in 0..lines {
        for c in 0..CHANNELS {
            for (i, b) in buf.iter_mut().enumerate() {
                let v = match axis {
                    ScanAxis::Rows => img.get(i, line, c),
                    ScanAxis::Columns => img.get(line, i, c),
                };
                *b = Complex::new(v, 0.0);
            }
            let mean = buf.iter().map(|z| z.re).sum::<f64>() / n as f64;
            for b in &mut buf {
                b.re -= mean;
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, p) in acc.iter_mut().zip(one_sided_power(&buf)) {
                *a += p;
            }
        }
    }

    let count = (lines * CHANNELS) as f64;
    let step = 1.0 / (n as f64 * mm_per_pixel);
    Ok(SpectralResult {
        psd: acc.into_iter().map(|a| a / count).collect(),
        bin_freqs: (0..=n / 2).map(|k| k as f64 * step).collect(),
        fft_length: n,
        rows_averaged: lines,
        channels_averaged: CHANNELS,
    })
}

/// Indices of the two bins nearest `target` (cycles/mm), lower first.
///
/// Equidistant candidates resolve toward the lower frequency, so a target
/// sitting exactly on bin `k` selects `k - 1` and `k`.
pub fn nearest_bins(spec: &SpectralResult, target: f64) -> Result<[usize; 2]> {
    let bins = spec.psd.len();
    if bins < 3 {
        return Err(Error::Argument(format!(
            "spectrum needs at least 3 bins, has {bins}"
        )));
    }
    let nyquist = spec.nyquist();
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::Argument(format!("target frequency {target} is invalid")));
    }
    if target > nyquist {
        return Err(Error::Argument(format!(
            "target frequency {target} cycles/mm exceeds the Nyquist frequency {nyquist} cycles/mm"
        )));
    }
    let last = bins - 1;
    let pos = target / spec.resolution();
    let nearest = pos.round();
    if (pos - nearest).abs() <= EXACT_BIN_TOLERANCE * pos.max(1.0) {
        let k = (nearest as usize).min(last);
        return Ok(match k {
            0 => [0, 1],
            k => [k - 1, k],
        });
    }
    let lo = (pos.floor() as usize).min(last - 1);
    Ok([lo, lo + 1])
}

/// Summed power of the two bins nearest `target` (cycles/mm).
pub fn band_power(spec: &SpectralResult, target: f64) -> Result<f64> {
    let [a, b] = nearest_bins(spec, target)?;
    Ok(spec.psd[a] + spec.psd[b])
}
