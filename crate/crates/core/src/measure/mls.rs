//! Maximum-length sequences from Fibonacci LFSRs.

use crate::error::{Error, Result};
use crate::signal::Signal;

pub const MIN_ORDER: u32 = 2;
pub const MAX_ORDER: u32 = 24;

/// Feedback taps (1-based register positions) of a primitive polynomial per
/// order, from the standard maximal-length LFSR tables.
const TAPS: [&[u32]; 23] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 11, 10, 4],
    &[13, 12, 11, 8],
    &[14, 13, 12, 2],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 18, 17, 14],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
];

pub fn taps(order: u32) -> Result<&'static [u32]> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    Ok(TAPS[(order - MIN_ORDER) as usize])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlsConfig {
    /// LFSR degree; the period is `2^order - 1`.
    pub order: u32,
    /// Peak level, volts; bits map to ±amplitude.
    pub amplitude: f64,
    /// Initial register state, nonzero.
    pub seed: u32,
    /// Samples per sequence symbol. Values above 1 hold each symbol, which
    /// band-limits the stimulus for systems that sample slower than the
    /// simulation.
    pub chip_samples: usize,
}

impl Default for MlsConfig {
    fn default() -> Self {
        Self {
            order: 16,
            amplitude: 0.5,
            seed: 1,
            chip_samples: 1,
        }
    }
}

impl MlsConfig {
    pub fn validate(&self) -> Result<()> {
        taps(self.order)?;
        let mask = (1u32 << self.order) - 1;
        if self.seed & mask == 0 {
            return Err(Error::InvalidMls(format!(
                "seed {:#x} is zero in the low {} bits",
                self.seed, self.order
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidMls(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if self.chip_samples == 0 {
            return Err(Error::InvalidMls("chip_samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> usize {
        (1usize << self.order) - 1
    }

    /// One period in samples, chips included.
    pub fn period_samples(&self) -> usize {
        self.period() * self.chip_samples
    }
}

/// Fibonacci LFSR yielding its output bit each step.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
    order: u32,
    tap_shifts: Vec<u32>,
}

impl Lfsr {
    pub fn new(order: u32, seed: u32) -> Result<Self> {
        let tap_list = taps(order)?;
        let state = seed & ((1u32 << order) - 1);
        if state == 0 {
            return Err(Error::InvalidMls("LFSR state must be nonzero".into()));
        }
        Ok(Self {
            state,
            order,
            tap_shifts: tap_list.iter().map(|t| order - t).collect(),
        })
    }

    pub fn state(&self) -> u32 {
        self.state
    }
}

impl Iterator for Lfsr {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        let out = self.state & 1 == 1;
        let feedback = self
            .tap_shifts
            .iter()
            .fold(0, |acc, &s| acc ^ (self.state >> s))
            & 1;
        self.state = (self.state >> 1) | (feedback << (self.order - 1));
        Some(out)
    }
}

/// One period of output bits.
pub fn mls_bits(cfg: &MlsConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    Ok(Lfsr::new(cfg.order, cfg.seed)?.take(cfg.period()).collect())
}

/// One period as ±amplitude (bit 1 → +amplitude), each symbol held for
/// `chip_samples` samples.
pub fn generate_mls(cfg: &MlsConfig, sample_rate: f64) -> Result<Signal> {
    let bits = mls_bits(cfg)?;
    let samples = bits
        .iter()
        .flat_map(|&b| {
            let v = if b { cfg.amplitude } else { -cfg.amplitude };
            std::iter::repeat_n(v, cfg.chip_samples)
        })
        .collect();
    Signal::new(samples, sample_rate)
}
