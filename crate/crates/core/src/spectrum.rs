//! Averaged-periodogram power spectra in dBV.
//!
//! Bin powers carry coherent-gain correction, so the peak bin of a
//! bin-centred sine reads its rms² directly (a 0.5 Vrms tone reads -6.02 dBV).
//! Summing bins over a band over-counts by the window's equivalent noise
//! bandwidth; [`Spectrum::band_power`] divides it back out.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Default segment length for [`power_spectrum`].
pub const DEFAULT_SEGMENT_LEN: usize = 16_384;

/// dB value reported for a bin with zero power.
pub const POWER_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    /// Periodic (DFT-even) coefficients.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bin_frequencies: Vec<f64>,
    powers: Vec<f64>,
    resolution_hz: f64,
    enbw_bins: f64,
}

impl Spectrum {
    pub fn bin_frequencies(&self) -> &[f64] {
        &self.bin_frequencies
    }

    /// Linear bin powers, V² rms.
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn bin_powers_dbv(&self) -> Vec<f64> {
        self.powers.iter().map(|&p| power_to_db(p)).collect()
    }

    pub fn resolution_hz(&self) -> f64 {
        self.resolution_hz
    }

    /// Equivalent noise bandwidth of the analysis window, in bins.
    pub fn enbw_bins(&self) -> f64 {
        self.enbw_bins
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn nearest_bin(&self, freq: f64) -> usize {
        ((freq / self.resolution_hz).round().max(0.0) as usize).min(self.powers.len() - 1)
    }

    pub fn peak_bin(&self) -> usize {
        self.powers
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |best, (i, &p)| if p > best.1 { (i, p) } else { best },
            )
            .0
    }

    /// Total power in `[lo_hz, hi_hz]`, window-corrected (V² rms).
    pub fn band_power(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        self.bin_frequencies
            .iter()
            .zip(&self.powers)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .map(|(_, p)| p)
            .sum::<f64>()
            / self.enbw_bins
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum::<f64>() / self.enbw_bins
    }
}

pub fn power_to_db(p: f64) -> f64 {
    if p > 0.0 {
        10.0 * p.log10()
    } else {
        POWER_FLOOR_DB
    }
}

/// `|X[k]|²` for `k = 0..=len/2` of the windowed samples.
pub(crate) fn windowed_power(samples: &[f64], window: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .zip(window)
        .map(|(&x, &w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Welch averaged periodogram: segments of `segment_len` with 50 % overlap
/// for Hann (none for rectangular), one-sided, coherent-gain corrected.
pub fn power_spectrum(sig: &Signal, window: Window, segment_len: usize) -> Result<Spectrum> {
    if sig.is_empty() {
        return Err(Error::EmptySignal);
    }
    if segment_len < 2 || !segment_len.is_power_of_two() || segment_len > sig.len() {
        return Err(Error::InvalidSegment {
            len: segment_len,
            available: sig.len(),
        });
    }
    let coeffs = window.coefficients(segment_len);
    let coherent: f64 = coeffs.iter().sum();
    let energy: f64 = coeffs.iter().map(|w| w * w).sum();
    let hop = match window {
        Window::Hann => segment_len / 2,
        Window::Rectangular => segment_len,
    };

    let half = segment_len / 2;
    let mut acc = vec![0.0; half + 1];
    let mut segments = 0usize;
    let mut start = 0;
    while start + segment_len <= sig.len() {
        let p = windowed_power(&sig.samples()[start..start + segment_len], &coeffs);
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        segments += 1;
        start += hop;
    }

    let norm = coherent * coherent * segments as f64;
    let powers = acc
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
            one_sided * v / norm
        })
        .collect();
    let resolution_hz = sig.sample_rate() / segment_len as f64;
    Ok(Spectrum {
        bin_frequencies: (0..=half).map(|k| k as f64 * resolution_hz).collect(),
        powers,
        resolution_hz,
        enbw_bins: segment_len as f64 * energy / (coherent * coherent),
    })
}
