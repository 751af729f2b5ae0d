//! Latency and distortion measurements applied to either chain.

mod analyzer;
mod impulse;
mod mls;

pub use analyzer::{
    analyze_distortion, coherent_length, measure_thd, measure_thdn, DistortionReport,
    HARMONIC_HALF_WIDTH_BINS, MAX_HARMONIC_ORDER, MIN_PERIODS,
};
pub use impulse::{estimate_latency, measure_impulse_response, LatencyReport, PEAK_GUARD_SAMPLES};
pub use mls::{generate_mls, mls_bits, taps, Lfsr, MlsConfig, MAX_ORDER, MIN_ORDER};

use crate::signal::Signal;

/// Removes the mean, standing in for the AC coupling of a measurement input.
pub fn ac_couple(sig: &Signal) -> Signal {
    let mean = sig.mean();
    sig.map(|v| v - mean)
}
