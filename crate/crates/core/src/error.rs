use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("stimulus at {freq} Hz is at or above Nyquist ({nyquist} Hz)")]
    AliasedStimulus { freq: f64, nyquist: f64 },

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("code {code} outside [0, {max}]")]
    InvalidCode { code: i64, max: u64 },

    #[error("empty signal")]
    EmptySignal,

    #[error(
        "invalid segment length {len} for a signal of {available} samples (must be a power of two)"
    )]
    InvalidSegment { len: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "distortion target {target_db} dB (peak {peak} V) is outside the weak-distortion regime"
    )]
    OutsideWeakRegime { target_db: f64, peak: f64 },

    #[error("{volts} V at the ADC input is outside the safe range [{low}, {high}] V")]
    DamageVoltage { volts: f64, low: f64, high: f64 },

    #[error("conversion plus SPI transfer ({busy_s} s) does not fit in one sample period ({period_s} s)")]
    InfeasibleTiming { busy_s: f64, period_s: f64 },

    #[error("no primitive feedback taps for MLS order {0} (supported: 2..=24)")]
    UnsupportedOrder(u32),

    #[error("invalid MLS configuration: {0}")]
    InvalidMls(String),

    #[error("system returned {actual} samples, expected at least {expected}")]
    TruncatedResponse { expected: usize, actual: usize },

    #[error("impulse response has no peak (all zero)")]
    NoPeak,

    #[error("no dominant spectral peak near the fundamental at {fundamental_hz} Hz")]
    FundamentalNotFound { fundamental_hz: f64 },
}
