//! Uniform quantization with an optional ENOB noise model.
//!
//! Codes span `0..=2^bits - 1` across `[v_min, v_max]`, so one LSB is
//! `(v_max - v_min) / (2^bits - 1)`, which is the conversion constant the
//! firmware uses (`Vref / ((1 << bits) - 1)`).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    bits: u32,
    v_min: f64,
    v_max: f64,
    enob: Option<f64>,
}

impl QuantizerSpec {
    pub fn new(bits: u32, v_min: f64, v_max: f64, enob: Option<f64>) -> Result<Self> {
        if !(1..=32).contains(&bits) {
            return Err(Error::InvalidQuantizer(format!(
                "bits must be in 1..=32, got {bits}"
            )));
        }
        if !(v_min.is_finite() && v_max.is_finite() && v_max > v_min) {
            return Err(Error::InvalidQuantizer(format!(
                "range [{v_min}, {v_max}] is empty"
            )));
        }
        if let Some(e) = enob {
            if !(e > 0.0 && e <= bits as f64) {
                return Err(Error::InvalidQuantizer(format!(
                    "enob must be in (0, {bits}], got {e}"
                )));
            }
        }
        Ok(Self {
            bits,
            v_min,
            v_max,
            enob,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn enob(&self) -> Option<f64> {
        self.enob
    }

    pub fn with_enob(self, enob: Option<f64>) -> Result<Self> {
        Self::new(self.bits, self.v_min, self.v_max, enob)
    }

    pub fn max_code(&self) -> u32 {
        ((1u64 << self.bits) - 1) as u32
    }

    pub fn span(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn lsb(&self) -> f64 {
        self.span() / self.max_code() as f64
    }

    /// Rms of the Gaussian input noise implied by `enob`.
    ///
    /// The ideal quantizer alone gives a full-scale sine a noise power of
    /// `lsb²/12`; an ENOB of `e` multiplies that by `4^(bits - e)` (the
    /// `6.02·e + 1.76 dB` SINAD relation with unrounded constants). The
    /// Gaussian term supplies the difference, so `enob == bits` yields
    /// exactly zero.
    pub fn enob_noise_rms(&self) -> f64 {
        match self.enob {
            None => 0.0,
            Some(e) => {
                let excess = 4f64.powf(self.bits as f64 - e) - 1.0;
                (self.lsb() * self.lsb() / 12.0 * excess).sqrt()
            }
        }
    }
}

/// Quantizes without noise. Consumes no randomness.
pub fn quantize_noiseless(v: f64, spec: &QuantizerSpec) -> u32 {
    let max = spec.max_code() as f64;
    let scaled = (v - spec.v_min) / spec.span() * max;
    // f64::round is half-away-from-zero
    scaled.round().clamp(0.0, max) as u32
}

/// Quantizes `v`, adding ENOB noise first when the spec carries an ENOB.
pub fn quantize_uniform<R: Rng + ?Sized>(v: f64, spec: &QuantizerSpec, rng: &mut R) -> u32 {
    let sigma = spec.enob_noise_rms();
    if sigma == 0.0 {
        return quantize_noiseless(v, spec);
    }
    let z: f64 = rng.sample(StandardNormal);
    quantize_noiseless(v + sigma * z, spec)
}

pub fn dequantize(code: u32, spec: &QuantizerSpec) -> Result<f64> {
    if code > spec.max_code() {
        return Err(Error::InvalidCode {
            code: code as i64,
            max: spec.max_code() as u64,
        });
    }
    Ok(spec.v_min + code as f64 * spec.lsb())
}
