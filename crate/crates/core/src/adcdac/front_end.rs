//! Analog conditioning ahead of the SAR ADC: AC coupling, bias, a 2nd-order
//! Sallen-Key low-pass, and the rail-to-rail op-amp output swing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEndConfig {
    /// Half the 3.3 V ADC reference.
    pub bias_voltage: f64,
    /// AC-coupling high-pass corner, Hz (1 mF coupling capacitor).
    pub coupling_cutoff: f64,
    pub sallen_key_cutoff: f64,
    pub sallen_key_q: f64,
    /// Op-amp output swing limits (30 mV inside the 0/3.3 V supply).
    pub rail_low: f64,
    pub rail_high: f64,
    /// Pin voltages outside these limits damage the ADC.
    pub damage_low: f64,
    pub damage_high: f64,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        Self {
            bias_voltage: 1.65,
            coupling_cutoff: 0.040,
            // not published; Butterworth anti-aliasing for 96 kHz sampling
            sallen_key_cutoff: 40_000.0,
            sallen_key_q: std::f64::consts::FRAC_1_SQRT_2,
            rail_low: 0.030,
            rail_high: 3.270,
            damage_low: -0.2,
            damage_high: 3.5,
        }
    }
}

impl FrontEndConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.coupling_cutoff > 0.0 && self.coupling_cutoff < self.sallen_key_cutoff) {
            return bad(format!(
                "need 0 < coupling_cutoff ({}) < sallen_key_cutoff ({})",
                self.coupling_cutoff, self.sallen_key_cutoff
            ));
        }
        if !(self.sallen_key_q > 0.0 && self.sallen_key_cutoff.is_finite()) {
            return bad(format!(
                "sallen_key_q must be positive, got {}",
                self.sallen_key_q
            ));
        }
        if !(self.rail_low < self.bias_voltage && self.bias_voltage < self.rail_high) {
            return bad(format!(
                "bias {} V must lie between the rails [{}, {}] V",
                self.bias_voltage, self.rail_low, self.rail_high
            ));
        }
        if !(self.damage_low < self.rail_low && self.damage_high > self.rail_high) {
            return bad(format!(
                "damage limits [{}, {}] V must enclose the rails [{}, {}] V",
                self.damage_low, self.damage_high, self.rail_low, self.rail_high
            ));
        }
        Ok(())
    }
}

/// Flags a raw pin voltage that would damage the ADC.
pub fn check_damage(v: f64, cfg: &FrontEndConfig) -> Result<()> {
    if v > cfg.damage_high || v < cfg.damage_low || v.is_nan() {
        return Err(Error::DamageVoltage {
            volts: v,
            low: cfg.damage_low,
            high: cfg.damage_high,
        });
    }
    Ok(())
}

/// RC high-pass with the exact one-pole recurrence `y = α(y' + x - x')`,
/// `α = exp(-2π·fc/fs)`.
#[derive(Debug, Clone)]
struct CouplingHighPass {
    alpha: f64,
    x_prev: Option<f64>,
    y_prev: f64,
}

impl CouplingHighPass {
    fn new(cutoff: f64, sample_rate: f64) -> Self {
        Self {
            alpha: (-2.0 * PI * cutoff / sample_rate).exp(),
            x_prev: None,
            y_prev: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        // the input is taken to have sat at its first value forever
        let x_prev = self.x_prev.unwrap_or(x);
        let y = self.alpha * (self.y_prev + x - x_prev);
        self.x_prev = Some(x);
        self.y_prev = y;
        y
    }
}

/// Normalised biquad `[b0, b1, b2, a1, a2]` for the bilinear transform of
/// `ω0² / (s² + (ω0/Q)s + ω0²)`, prewarped to `cutoff` when it is below Nyquist.
pub(crate) fn sallen_key_coefficients(cutoff: f64, q: f64, sample_rate: f64) -> [f64; 5] {
    let w = if cutoff < sample_rate / 2.0 {
        (PI * cutoff / sample_rate).tan()
    } else {
        PI * cutoff / sample_rate
    };
    let w2 = w * w;
    let a0 = 1.0 + w / q + w2;
    [
        w2 / a0,
        2.0 * w2 / a0,
        w2 / a0,
        (2.0 * w2 - 2.0) / a0,
        (1.0 - w / q + w2) / a0,
    ]
}

/// Transposed direct form II, unity DC gain.
#[derive(Debug, Clone)]
struct SallenKeyLowPass {
    c: [f64; 5],
    s1: f64,
    s2: f64,
    primed: bool,
}

impl SallenKeyLowPass {
    fn new(cutoff: f64, q: f64, sample_rate: f64) -> Self {
        Self {
            c: sallen_key_coefficients(cutoff, q, sample_rate),
            s1: 0.0,
            s2: 0.0,
            primed: false,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let [b0, b1, b2, a1, a2] = self.c;
        if !self.primed {
            // steady state for a constant input x
            self.s2 = (b2 - a2) * x;
            self.s1 = (b1 - a1) * x + self.s2;
            self.primed = true;
        }
        let y = b0 * x + self.s1;
        self.s1 = b1 * x - a1 * y + self.s2;
        self.s2 = b2 * x - a2 * y;
        y
    }
}

/// Stateful front end for one input channel.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    cfg: FrontEndConfig,
    coupling: CouplingHighPass,
    low_pass: SallenKeyLowPass,
}

impl FrontEnd {
    pub fn new(cfg: &FrontEndConfig, sample_rate: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: *cfg,
            coupling: CouplingHighPass::new(cfg.coupling_cutoff, sample_rate),
            low_pass: SallenKeyLowPass::new(cfg.sallen_key_cutoff, cfg.sallen_key_q, sample_rate),
        })
    }

    /// Conditioned voltage before the output-swing clamp.
    pub fn filter(&mut self, x: f64) -> f64 {
        let coupled = self.coupling.process(x);
        self.low_pass.process(coupled + self.cfg.bias_voltage)
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.cfg.rail_low, self.cfg.rail_high)
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let v = self.filter(x);
        self.clamp(v)
    }
}

/// AC coupling, bias, Sallen-Key low-pass and rail clamp, in that order.
pub fn front_end_filter(sig: &Signal, cfg: &FrontEndConfig) -> Result<Signal> {
    let mut fe = FrontEnd::new(cfg, sig.sample_rate())?;
    Signal::new(
        sig.samples().iter().map(|&x| fe.process(x)).collect(),
        sig.sample_rate(),
    )
}
