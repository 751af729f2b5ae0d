//! 16-bit PCM WAV files holding analog voltages.
//!
//! A sample of `scale` volts is written as 32767; reading divides by the
//! same factor.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use audiochain::Signal;

use crate::error::{CliError, Result};

/// Volts at WAV full scale.
pub const DEFAULT_WAV_SCALE: f64 = 1.0;
const FULL_SCALE_CODE: f64 = 32_767.0;

fn to_code(v: f64, index: usize, scale: f64) -> Result<i16> {
    let code = (v / scale * FULL_SCALE_CODE).round();
    if !(-FULL_SCALE_CODE..=FULL_SCALE_CODE).contains(&code) {
        return Err(CliError::Unrepresentable {
            index,
            volts: v,
            scale,
        });
    }
    Ok(code as i16)
}

/// Writes one channel per signal, interleaved. All channels must share a
/// rate and a length.
pub fn write_wav(path: &Path, channels: &[&Signal], scale: f64) -> Result<()> {
    let first = channels
        .first()
        .ok_or_else(|| CliError::Usage("no channels to write".into()))?;
    if channels
        .iter()
        .any(|c| c.len() != first.len() || c.sample_rate() != first.sample_rate())
    {
        return Err(CliError::Usage(
            "WAV channels differ in rate or length".into(),
        ));
    }
    let rate = first.sample_rate();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(CliError::Usage(format!(
            "{rate} Hz is not a whole WAV sample rate"
        )));
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let codes = (0..first.len())
        .flat_map(|i| channels.iter().map(move |c| (i, c.samples()[i])))
        .map(|(i, v)| to_code(v, i, scale))
        .collect::<Result<Vec<i16>>>()?;
    let mut w = hound::WavWriter::create(path, spec).map_err(hound_error)?;
    let mut w16 = w.get_i16_writer(codes.len() as u32);
    for c in codes {
        w16.write_sample(c);
    }
    w16.flush().map_err(hound_error)?;
    w.finalize().map_err(hound_error)?;
    Ok(())
}

/// One signal per channel. Only 16-bit integer PCM, mono or stereo.
pub fn read_wav(path: &Path, scale: f64) -> Result<Vec<Signal>> {
    let file = File::open(path)?;
    let reader = hound::WavReader::new(BufReader::new(file)).map_err(hound_error)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(CliError::UnsupportedWav(format!(
            "{} {}-bit samples; only 16-bit integer PCM is read",
            match spec.sample_format {
                hound::SampleFormat::Int => "integer",
                hound::SampleFormat::Float => "float",
            },
            spec.bits_per_sample
        )));
    }
    if !(1..=2).contains(&spec.channels) {
        return Err(CliError::UnsupportedWav(format!(
            "{} channels; only mono or stereo is read",
            spec.channels
        )));
    }
    let n_ch = spec.channels as usize;
    let mut chans = vec![Vec::new(); n_ch];
    for (i, s) in reader.into_samples::<i16>().enumerate() {
        let s = s.map_err(hound_error)?;
        chans[i % n_ch].push(s as f64 / FULL_SCALE_CODE * scale);
    }
    if chans.iter().any(|c| c.len() != chans[0].len()) {
        return Err(CliError::UnsupportedWav("truncated final frame".into()));
    }
    chans
        .into_iter()
        .map(|c| Ok(Signal::new(c, spec.sample_rate as f64)?))
        .collect()
}

fn hound_error(e: hound::Error) -> CliError {
    match e {
        hound::Error::IoError(io) => CliError::Io(io),
        other => CliError::UnsupportedWav(other.to_string()),
    }
}
