//! Two-byte SPI frame for the 16-bit DAC: big-endian, MSB first on the wire.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpiFrame {
    pub byte_high: u8,
    pub byte_low: u8,
}

impl SpiFrame {
    /// Bytes in transmission order.
    pub fn to_bytes(self) -> [u8; 2] {
        [self.byte_high, self.byte_low]
    }

    pub fn from_bytes(bytes: [u8; 2]) -> Self {
        Self {
            byte_high: bytes[0],
            byte_low: bytes[1],
        }
    }
}

/// `SPIBuff[0] = valDAC >> 8; SPIBuff[1] = valDAC & 0xFF`.
pub fn spi_encode(dac_code: u32) -> Result<SpiFrame> {
    let code = u16::try_from(dac_code).map_err(|_| Error::InvalidCode {
        code: dac_code as i64,
        max: u16::MAX as u64,
    })?;
    let [byte_high, byte_low] = code.to_be_bytes();
    Ok(SpiFrame {
        byte_high,
        byte_low,
    })
}

pub fn spi_decode(frame: SpiFrame) -> u16 {
    u16::from_be_bytes(frame.to_bytes())
}

/// Seconds to clock one 16-bit word out at `spi_clock` Hz.
pub fn spi_transfer_time(spi_clock: f64) -> f64 {
    16.0 / spi_clock
}
