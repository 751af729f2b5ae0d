//! Uniformly sampled waveforms (volts) and test-stimulus generators.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A finite, uniformly sampled real waveform in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.mean_square().sqrt()
    }

    /// Samples `start..end`, same rate.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Sample-wise sum; both signals must share rate and length.
    pub fn add(&self, other: &Signal) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            sample_rate: self.sample_rate,
        })
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| f(s)).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Delays by `delay` whole samples, keeping the length; the head is zero-filled.
    pub fn delayed(&self, delay: usize) -> Self {
        let n = self.samples.len();
        let mut out = vec![0.0; n];
        if delay < n {
            out[delay..].copy_from_slice(&self.samples[..n - delay]);
        }
        Self {
            samples: out,
            sample_rate: self.sample_rate,
        }
    }

    pub(crate) fn check_same_shape(&self, other: &Signal) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::ShapeMismatch(format!(
                "sample rates differ: {} Hz vs {} Hz",
                self.sample_rate, other.sample_rate
            )));
        }
        if self.samples.len() != other.samples.len() {
            return Err(Error::ShapeMismatch(format!(
                "lengths differ: {} vs {}",
                self.samples.len(),
                other.samples.len()
            )));
        }
        Ok(())
    }
}

/// `amplitude_rms·√2·sin(2π·freq·n/fs + phase)` for `round(duration·fs)` samples.
pub fn generate_sine(
    freq: f64,
    amplitude_rms: f64,
    duration: f64,
    sample_rate: f64,
    phase: f64,
) -> Result<Signal> {
    let nyquist = sample_rate / 2.0;
    if !(freq < nyquist) {
        return Err(Error::AliasedStimulus { freq, nyquist });
    }
    if !(duration > 0.0) {
        return Err(Error::InvalidSignal(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let len = (duration * sample_rate).round().max(1.0) as usize;
    let peak = amplitude_rms * std::f64::consts::SQRT_2;
    let w = 2.0 * PI * freq / sample_rate;
    let samples = (0..len)
        .map(|n| peak * (w * n as f64 + phase).sin())
        .collect();
    Signal::new(samples, sample_rate)
}
