//! Impulse response by periodic MLS excitation and circular cross-correlation.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::mls::{generate_mls, MlsConfig};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Samples on each side of the peak left out of the noise estimate.
pub const PEAK_GUARD_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub latency_seconds: f64,
    pub peak_sample_index: usize,
    /// Infinite when nothing but the peak region is nonzero.
    pub peak_to_noise_db: f64,
}

/// Drives `system` with `periods` back-to-back MLS periods, averages every
/// period after the first, and deconvolves against the stimulus.
///
/// The result is one period long. For `chip_samples == 1` and an LTI system
/// it is the system's impulse response folded modulo the period; with held
/// chips it is that response smoothed by a unit-peak triangle `chip_samples`
/// wide.
pub fn measure_impulse_response<F>(
    system: F,
    cfg: &MlsConfig,
    periods: usize,
    sample_rate: f64,
) -> Result<Signal>
where
    F: FnOnce(&Signal) -> Result<Signal>,
{
    if periods < 2 {
        return Err(Error::InvalidMls(format!(
            "need at least 2 periods (the first is discarded), got {periods}"
        )));
    }
    let one = generate_mls(cfg, sample_rate)?;
    let n = one.len();
    let mut drive = Vec::with_capacity(n * periods);
    for _ in 0..periods {
        drive.extend_from_slice(one.samples());
    }
    let response = system(&Signal::new(drive, sample_rate)?)?;
    if response.len() < n * periods {
        return Err(Error::TruncatedResponse {
            expected: n * periods,
            actual: response.len(),
        });
    }

    let mut avg = vec![0.0; n];
    for p in 1..periods {
        for (a, y) in avg.iter_mut().zip(&response.samples()[p * n..(p + 1) * n]) {
            *a += y;
        }
    }
    let inv = 1.0 / (periods - 1) as f64;
    avg.iter_mut().for_each(|a| *a *= inv);

    let r = circular_xcorr(&avg, one.samples());
    let c = cfg.chip_samples as f64;
    let total: f64 = r.iter().sum();
    let norm = (cfg.period() + 1) as f64 * c * cfg.amplitude * cfg.amplitude;
    Signal::new(
        r.iter().map(|&v| (v + total / c) / norm).collect(),
        response.sample_rate(),
    )
}

/// `r[τ] = Σ_n y[n]·s[(n − τ) mod N]`.
fn circular_xcorr(y: &[f64], s: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let mut yf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut sf: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut yf);
    fwd.process(&mut sf);
    for (a, b) in yf.iter_mut().zip(&sf) {
        *a *= b.conj();
    }
    planner.plan_fft_inverse(n).process(&mut yf);
    yf.iter().map(|v| v.re / n as f64).collect()
}

/// Latency as the first index of the largest `|ir|`.
pub fn estimate_latency(ir: &Signal) -> Result<LatencyReport> {
    if ir.is_empty() {
        return Err(Error::EmptySignal);
    }
    let s = ir.samples();
    let mut peak = 0;
    for (i, v) in s.iter().enumerate() {
        if v.abs() > s[peak].abs() {
            peak = i;
        }
    }
    let height = s[peak].abs();
    if height == 0.0 {
        return Err(Error::NoPeak);
    }
    let lo = peak.saturating_sub(PEAK_GUARD_SAMPLES);
    let hi = (peak + PEAK_GUARD_SAMPLES + 1).min(s.len());
    let rest = s[..lo].iter().chain(&s[hi..]);
    let count = s.len() - (hi - lo);
    let noise_ms = if count == 0 {
        0.0
    } else {
        rest.map(|v| v * v).sum::<f64>() / count as f64
    };
    let peak_to_noise_db = if noise_ms > 0.0 {
        20.0 * (height / noise_ms.sqrt()).log10()
    } else {
        f64::INFINITY
    };
    Ok(LatencyReport {
        latency_seconds: peak as f64 / ir.sample_rate(),
        peak_sample_index: peak,
        peak_to_noise_db,
    })
}
