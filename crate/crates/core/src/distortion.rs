//! Memoryless weak polynomial nonlinearity, `y = x + a2·x² + a3·x³` (volts).

use crate::error::{Error, Result};

/// Targets above this are outside the weak-distortion regime.
pub const MAX_TARGET_DB: f64 = -40.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolynomialDistortion {
    a2: f64,
    a3: f64,
}

impl PolynomialDistortion {
    pub fn new(a2: f64, a3: f64) -> Result<Self> {
        if !(a2.abs() < 0.1 && a3.abs() < 0.1) {
            return Err(Error::InvalidConfig(format!(
                "distortion coefficients must satisfy |a| < 0.1, got a2 = {a2}, a3 = {a3}"
            )));
        }
        Ok(Self { a2, a3 })
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn a3(&self) -> f64 {
        self.a3
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        x + x * x * (self.a2 + self.a3 * x)
    }
}

/// Coefficients that put the 2nd and 3rd harmonics of `peak·sin(ωt)` at the
/// given levels relative to the fundamental. Pass `f64::NEG_INFINITY` to
/// leave a harmonic out.
///
/// From `sin² = (1 - cos 2ωt)/2` and `sin³ = (3 sin ωt - sin 3ωt)/4`:
/// `a2 = 2·10^(hd2/20)/A`, `a3 = 4·10^(hd3/20)/A²`.
pub fn calibrate_distortion(
    target_hd2_db: f64,
    target_hd3_db: f64,
    peak_amplitude: f64,
) -> Result<PolynomialDistortion> {
    if !(peak_amplitude > 0.0 && peak_amplitude.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "peak amplitude must be positive, got {peak_amplitude}"
        )));
    }
    for target in [target_hd2_db, target_hd3_db] {
        if target.is_nan() || target > MAX_TARGET_DB {
            return Err(Error::OutsideWeakRegime {
                target_db: target,
                peak: peak_amplitude,
            });
        }
    }
    let a2 = 2.0 * db_to_amplitude(target_hd2_db) / peak_amplitude;
    let a3 = 4.0 * db_to_amplitude(target_hd3_db) / (peak_amplitude * peak_amplitude);
    PolynomialDistortion::new(a2, a3).map_err(|_| Error::OutsideWeakRegime {
        target_db: target_hd2_db.max(target_hd3_db),
        peak: peak_amplitude,
    })
}

fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
