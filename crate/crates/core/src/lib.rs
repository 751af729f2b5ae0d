//! Simulation of two real-time audio I/O chains and the measurements used to
//! characterise them.
//!
//! [`i2s`] models a block-buffered codec pipeline; [`adcdac`] models a
//! sample-by-sample path through two SAR ADC inputs and an external SPI DAC.
//! [`measure`] estimates latency from an MLS impulse response and THD/THD+N
//! from a windowed FFT.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adcdac;
pub mod distortion;
pub mod error;
pub mod i2s;
pub mod measure;
pub mod quantize;
pub mod signal;
pub mod spectrum;

pub use distortion::{calibrate_distortion, PolynomialDistortion};
pub use error::{Error, Result};
pub use quantize::{dequantize, quantize_noiseless, quantize_uniform, QuantizerSpec};
pub use signal::{generate_sine, Signal};
pub use spectrum::{power_spectrum, power_to_db, Spectrum, Window};
