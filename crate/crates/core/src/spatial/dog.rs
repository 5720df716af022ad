use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Frame, CHANNELS};

/// Sampled Gaussian truncated at `ceil(3σ)` and normalized to unit sum.
///
/// The centre tap sits at index `radius = (len - 1) / 2`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = ((3.0 * sigma).ceil() as usize).max(1);
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with edge replication, per channel.
pub fn gaussian_blur(img: &Frame, sigma: f64) -> Frame {
    let kernel = gaussian_kernel(sigma);
    let horizontal = convolve_rows(img, &kernel);
    convolve_columns(&horizontal, &kernel)
}

fn convolve_rows(img: &Frame, kernel: &[f64]) -> Frame {
    let (w, h) = img.dims();
    let r = kernel.len() / 2;
    let src = img.samples();
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w * CHANNELS)
        .enumerate()
        .for_each(|(y, row_out)| {
            let row = &src[y * w * CHANNELS..(y + 1) * w * CHANNELS];
            for x in 0..w {
                let mut acc = [0.0; CHANNELS];
                for (j, &kv) in kernel.iter().enumerate() {
                    let xs = (x + j).saturating_sub(r).min(w - 1);
                    let px = &row[xs * CHANNELS..xs * CHANNELS + CHANNELS];
                    for c in 0..CHANNELS {
                        acc[c] += kv * px[c];
                    }
                }
                row_out[x * CHANNELS..x * CHANNELS + CHANNELS].copy_from_slice(&acc);
            }
        });
    Frame::new(w, h, out).expect("same shape")
}

fn convolve_columns(img: &Frame, kernel: &[f64]) -> Frame {
    let (w, h) = img.dims();
    let r = kernel.len() / 2;
    let src = img.samples();
    let stride = w * CHANNELS;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(stride).enumerate().for_each(|(y, row_out)| {
        for (j, &kv) in kernel.iter().enumerate() {
            let ys = (y + j).saturating_sub(r).min(h - 1);
            let row = &src[ys * stride..(ys + 1) * stride];
            for (o, &v) in row_out.iter_mut().zip(row) {
                *o += kv * v;
            }
        }
    });
    Frame::new(w, h, out).expect("same shape")
}

/// Difference-of-Gaussians band-pass: `G(σ_low) * img − G(σ_high) * img`.
pub fn difference_of_gaussians(img: &Frame, sigma_low: f64, sigma_high: f64) -> Result<Frame> {
    if !(sigma_low > 0.0 && sigma_low < sigma_high && sigma_high.is_finite()) {
        return Err(Error::Argument(format!(
            "DoG sigmas must satisfy 0 < low < high, got {sigma_low}, {sigma_high}"
        )));
    }
    let (w, h) = img.dims();
    let min = 6.0 * sigma_high;
    if (w as f64) <= min || (h as f64) <= min {
        return Err(Error::Argument(format!(
            "{w}x{h} image is too small for a DoG with sigma {sigma_high} (needs more than {min} px per side)"
        )));
    }
    let low = gaussian_blur(img, sigma_low);
    let high = gaussian_blur(img, sigma_high);
    let data = low
        .samples()
        .iter()
        .zip(high.samples())
        .map(|(a, b)| a - b)
        .collect();
    Frame::new(w, h, data)
}

/// Continuous-domain DoG transfer function at `freq` cycles/pixel.
pub fn dog_transfer(freq: f64, sigma_low: f64, sigma_high: f64) -> f64 {
    let a = 2.0 * std::f64::consts::PI.powi(2) * freq * freq;
    (-a * sigma_low * sigma_low).exp() - (-a * sigma_high * sigma_high).exp()
}

/// Frequency (cycles/pixel) at which the DoG response peaks.
pub fn dog_peak_frequency(sigma_low: f64, sigma_high: f64) -> f64 {
    let (l2, h2) = (sigma_low * sigma_low, sigma_high * sigma_high);
    let a = (h2 / l2).ln() / (h2 - l2);
    (a / (2.0 * std::f64::consts::PI.powi(2))).sqrt()
}
