//! THD and THD+N from a single Hann-windowed FFT.

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::spectrum::{power_to_db, windowed_power, Window};

/// Bins on each side of a harmonic's centre integrated into its power.
pub const HARMONIC_HALF_WIDTH_BINS: usize = 3;
/// Highest harmonic order counted when none is requested.
pub const MAX_HARMONIC_ORDER: usize = 20;
/// Periods of the fundamental the record must span.
pub const MIN_PERIODS: f64 = 10.0;
/// Largest period count tried when looking for a whole-cycle record.
const MAX_COHERENT_PERIODS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub fundamental_hz: f64,
    pub fundamental_power_dbv: f64,
    pub thd_db: f64,
    pub thdn_db: f64,
    /// `(order, level relative to the fundamental in dB)` for orders 2 and up.
    pub harmonic_levels: Vec<(usize, f64)>,
}

/// Largest length `≤ len` holding a whole number of fundamental periods, or
/// `len` when the period is not a ratio of small integers in samples.
pub fn coherent_length(len: usize, sample_rate: f64, fundamental_hz: f64) -> usize {
    let period = sample_rate / fundamental_hz;
    for p in 1..=MAX_COHERENT_PERIODS {
        let q = p as f64 * period;
        let rq = q.round();
        if (q - rq).abs() <= 1e-9 * q && rq >= 1.0 {
            let block = rq as usize;
            if block <= len {
                return len / block * block;
            }
            break;
        }
    }
    len
}

/// Harmonic analysis of the tail of `sig`, trimmed to a whole number of
/// fundamental periods. The mean is removed first. `max_harmonic` is the
/// highest order counted; `None` means every order below Nyquist, up to 20.
pub fn analyze_distortion(
    sig: &Signal,
    fundamental_hz: f64,
    max_harmonic: Option<usize>,
) -> Result<DistortionReport> {
    let fs = sig.sample_rate();
    let nyquist = fs / 2.0;
    if !(fundamental_hz > 0.0 && fundamental_hz < nyquist) {
        return Err(Error::AliasedStimulus {
            freq: fundamental_hz,
            nyquist,
        });
    }
    let needed = (MIN_PERIODS * fs / fundamental_hz).ceil() as usize;
    if sig.len() < needed {
        return Err(Error::InvalidSignal(format!(
            "{} samples is under {MIN_PERIODS} periods of {fundamental_hz} Hz ({needed} samples)",
            sig.len()
        )));
    }

    let n = coherent_length(sig.len(), fs, fundamental_hz);
    let tail = &sig.samples()[sig.len() - n..];
    let mean = tail.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = tail.iter().map(|x| x - mean).collect();
    let window = Window::Hann.coefficients(n);
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let half = n / 2;
    // power spectral density scaled so that summing bins gives mean-square volts
    let bins: Vec<f64> = windowed_power(&centred, &window)
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == half) {
                1.0
            } else {
                2.0
            };
            one_sided * p / (n as f64 * energy)
        })
        .collect();

    let w = HARMONIC_HALF_WIDTH_BINS;
    let bin_of = |f: f64| (f * n as f64 / fs).round() as usize;
    let lobe = |centre: usize| {
        let lo = centre.saturating_sub(w).max(w + 1);
        let hi = (centre + w).min(half);
        (lo, hi)
    };
    let band = |(lo, hi): (usize, usize)| -> f64 {
        if lo > hi {
            0.0
        } else {
            bins[lo..=hi].iter().sum()
        }
    };

    let f1 = bin_of(fundamental_hz);
    let (lo1, hi1) = lobe(f1);
    let peak = (w + 1..=half)
        .max_by(|&a, &b| bins[a].total_cmp(&bins[b]))
        .unwrap_or(f1);
    if peak < lo1 || peak > hi1 {
        return Err(Error::FundamentalNotFound { fundamental_hz });
    }
    let p1 = band((lo1, hi1));
    if p1 <= 0.0 {
        return Err(Error::FundamentalNotFound { fundamental_hz });
    }

    let top = max_harmonic.unwrap_or(MAX_HARMONIC_ORDER);
    let mut harmonic_levels = Vec::new();
    let mut harmonic_power = 0.0;
    for k in 2..=top {
        let f = k as f64 * fundamental_hz;
        if f >= nyquist {
            break;
        }
        let pk = band(lobe(bin_of(f)));
        harmonic_power += pk;
        harmonic_levels.push((k, power_to_db(pk / p1)));
    }

    let dc: f64 = bins[..=w.min(half)].iter().sum();
    let total: f64 = bins.iter().sum();
    let residual = (total - p1 - dc).max(harmonic_power);

    Ok(DistortionReport {
        fundamental_hz,
        fundamental_power_dbv: power_to_db(p1),
        thd_db: power_to_db(harmonic_power / p1),
        thdn_db: power_to_db(residual / p1),
        harmonic_levels,
    })
}

pub fn measure_thd(
    sig: &Signal,
    fundamental_hz: f64,
    max_harmonic: Option<usize>,
) -> Result<DistortionReport> {
    analyze_distortion(sig, fundamental_hz, max_harmonic)
}

pub fn measure_thdn(sig: &Signal, fundamental_hz: f64) -> Result<DistortionReport> {
    analyze_distortion(sig, fundamental_hz, None)
}
