//! Named characterisation runs on either chain.

use std::path::PathBuf;

use audiochain::adcdac::{
    run_converter_path, run_sample_pipeline, FrontEndConfig, SampleChainConfig, SamplingSpeed,
};
use audiochain::i2s::{self, run_block_pipeline, BlockPipelineConfig, Passthrough};
use audiochain::measure::{
    ac_couple, analyze_distortion, estimate_latency, measure_impulse_response, MlsConfig,
};
use audiochain::spectrum::DEFAULT_SEGMENT_LEN;
use audiochain::{generate_sine, power_spectrum, Signal, Window};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::report::{DistortionRow, LatencyRow, Report, SpectrumRow};
use crate::wav::{read_wav, write_wav, DEFAULT_WAV_SCALE};

pub const LATENCY_MLS_ORDER: u32 = 16;
pub const LATENCY_PERIODS: usize = 4;
/// Simulation samples per PDB tick for ADC/DAC latency runs.
pub const ADCDAC_OVERSAMPLING: usize = 16;
/// Keeps one MLS period (chips included) near a quarter million samples.
pub const ADCDAC_MLS_ORDER: u32 = 14;
pub const MLS_AMPLITUDE: f64 = 0.5;
pub const TONE_HZ: f64 = 1000.0;
pub const TONE_SECONDS: f64 = 5.0;
/// Discarded from the start of every chain output before analysis.
pub const SETTLE_SECONDS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Chain {
    I2s,
    Adcdac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Measurement {
    Latency,
    Thd,
    Thdn,
    Spectrum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub chain: Chain,
    pub measurement: Measurement,
    /// i2s only; empty means the tabulated sweep.
    pub block_samples: Vec<usize>,
    /// adcdac only; empty means both speeds.
    pub sampling_speeds: Vec<SamplingSpeed>,
    /// Codec rate (i2s) or PDB rate (adcdac); the chain default when absent.
    pub sample_rate: Option<f64>,
    pub seed: u64,
    pub wav_in: Option<PathBuf>,
    pub wav_out: Option<PathBuf>,
}

impl Scenario {
    pub fn new(chain: Chain, measurement: Measurement) -> Self {
        Self {
            chain,
            measurement,
            block_samples: Vec::new(),
            sampling_speeds: Vec::new(),
            sample_rate: None,
            seed: 0,
            wav_in: None,
            wav_out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(CliError::Usage(m.into()));
        match self.chain {
            Chain::I2s if !self.sampling_speeds.is_empty() => {
                return usage("--sampling-speed applies to --chain adcdac only")
            }
            Chain::Adcdac if !self.block_samples.is_empty() => {
                return usage("--block-samples applies to --chain i2s only")
            }
            _ => {}
        }
        if let Some(r) = self.sample_rate {
            if !(r.is_finite() && r > 0.0) {
                return usage("--sample-rate must be positive");
            }
        }
        if self.measurement == Measurement::Latency && self.wav_in.is_some() {
            return usage("--wav-in drives tone measurements; latency uses its own MLS stimulus");
        }
        let single = self.measurement == Measurement::Spectrum
            || self.wav_in.is_some()
            || self.wav_out.is_some();
        if single && self.points() > 1 {
            return usage(
                "spectrum and WAV options need a single --block-samples or --sampling-speed",
            );
        }
        Ok(())
    }

    fn points(&self) -> usize {
        match self.chain {
            Chain::I2s => self.block_sizes().len(),
            Chain::Adcdac => self.speeds().len(),
        }
    }

    fn block_sizes(&self) -> Vec<usize> {
        if !self.block_samples.is_empty() {
            self.block_samples.clone()
        } else if self.single_point() {
            vec![i2s::DEFAULT_BLOCK_SAMPLES]
        } else {
            i2s::TABULATED_BLOCK_SAMPLES.to_vec()
        }
    }

    fn speeds(&self) -> Vec<SamplingSpeed> {
        if !self.sampling_speeds.is_empty() {
            self.sampling_speeds.clone()
        } else if self.single_point() {
            vec![SamplingSpeed::Low]
        } else {
            SamplingSpeed::ALL.to_vec()
        }
    }

    fn single_point(&self) -> bool {
        self.measurement == Measurement::Spectrum || self.wav_in.is_some() || self.wav_out.is_some()
    }
}

/// One point of a sweep: a chain configuration and its CSV label.
#[derive(Debug, Clone)]
enum Point {
    I2s(BlockPipelineConfig),
    Adcdac(SampleChainConfig),
}

impl Point {
    fn label(&self) -> String {
        match self {
            Point::I2s(c) => c.block_samples.to_string(),
            Point::Adcdac(c) => c.sampling_speed.to_string(),
        }
    }

    fn rate(&self) -> f64 {
        match self {
            Point::I2s(c) => c.sample_rate,
            Point::Adcdac(c) => c.sample_rate,
        }
    }

    fn with_rate(self, rate: f64) -> Self {
        match self {
            Point::I2s(c) => Point::I2s(BlockPipelineConfig {
                sample_rate: rate,
                ..c
            }),
            Point::Adcdac(c) => Point::Adcdac(SampleChainConfig {
                sample_rate: rate,
                ..c
            }),
        }
    }
}

/// RNG for sweep point `index`, independent of scheduling order.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs the scenario, writing `wav_out` if set, and returns the report.
pub fn run_scenario(s: &Scenario) -> Result<Report> {
    s.validate()?;
    let stimulus = match &s.wav_in {
        Some(p) => Some(read_wav(p, DEFAULT_WAV_SCALE)?),
        None => None,
    };
    let mut points: Vec<Point> = match s.chain {
        Chain::I2s => s
            .block_sizes()
            .into_iter()
            .map(|b| Point::I2s(BlockPipelineConfig::new(b)))
            .collect(),
        Chain::Adcdac => s
            .speeds()
            .into_iter()
            .map(|v| Point::Adcdac(SampleChainConfig::new(v)))
            .collect(),
    };
    if let Some(r) = s.sample_rate {
        points = points.into_iter().map(|p| p.with_rate(r)).collect();
    }
    if let Some(chans) = &stimulus {
        let wav_rate = chans[0].sample_rate();
        if s.sample_rate.is_some_and(|r| r != wav_rate) {
            return Err(CliError::Usage(format!(
                "--sample-rate disagrees with the {wav_rate} Hz WAV input"
            )));
        }
        points = points.into_iter().map(|p| p.with_rate(wav_rate)).collect();
    }

    match s.measurement {
        Measurement::Latency => {
            let rows = points
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let (ir, response) = measure_latency_ir(p, &mut point_rng(s.seed, i))?;
                    let rep = estimate_latency(&ir)?;
                    Ok((
                        LatencyRow {
                            parameter: p.label(),
                            latency_seconds: rep.latency_seconds,
                        },
                        response,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(path) = &s.wav_out {
                write_wav(path, &[&rows[0].1], DEFAULT_WAV_SCALE)?;
            }
            Ok(Report::Latency(rows.into_iter().map(|(r, _)| r).collect()))
        }
        Measurement::Thd | Measurement::Thdn => {
            let rows = points
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let out = tone_response(p, stimulus.as_deref(), &mut point_rng(s.seed, i))?;
                    let rep = analyze_distortion(&out, TONE_HZ, None)?;
                    Ok((
                        DistortionRow {
                            parameter: p.label(),
                            thd_db: rep.thd_db,
                            thdn_db: rep.thdn_db,
                        },
                        out,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(path) = &s.wav_out {
                write_wav(path, &[&rows[0].1], DEFAULT_WAV_SCALE)?;
            }
            Ok(Report::Distortion(
                rows.into_iter().map(|(r, _)| r).collect(),
            ))
        }
        Measurement::Spectrum => {
            let p = &points[0];
            let out = tone_response(p, stimulus.as_deref(), &mut point_rng(s.seed, 0))?;
            if let Some(path) = &s.wav_out {
                write_wav(path, &[&out], DEFAULT_WAV_SCALE)?;
            }
            let seg = DEFAULT_SEGMENT_LEN.min(prev_power_of_two(out.len()));
            let spec = power_spectrum(&out, Window::Hann, seg)?;
            Ok(Report::Spectrum(
                spec.bin_frequencies()
                    .iter()
                    .zip(spec.bin_powers_dbv())
                    .map(|(&f, p)| SpectrumRow {
                        frequency_hz: f,
                        power_dbv: p,
                    })
                    .collect(),
            ))
        }
    }
}

fn prev_power_of_two(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

/// Impulse response of the chain and the raw chain output it came from.
///
/// The ADC/DAC path runs at `ADCDAC_OVERSAMPLING` samples per PDB tick with
/// each MLS symbol held for one tick, so the measured delay is resolved to a
/// fraction of the conversion time. The stimulus rides on the front-end
/// bias and goes straight to the ADC pins; the output is AC-coupled.
fn measure_latency_ir(p: &Point, rng: &mut ChaCha8Rng) -> Result<(Signal, Signal)> {
    let mut response = None;
    let ir = match p {
        Point::I2s(cfg) => {
            let mls = MlsConfig {
                order: LATENCY_MLS_ORDER,
                amplitude: MLS_AMPLITUDE,
                ..Default::default()
            };
            measure_impulse_response(
                |x| {
                    let y = run_block_pipeline(x, x, cfg, &Passthrough, rng)?.0;
                    response = Some(y.clone());
                    Ok(y)
                },
                &mls,
                LATENCY_PERIODS,
                cfg.sample_rate,
            )?
        }
        Point::Adcdac(cfg) => {
            let mls = MlsConfig {
                order: ADCDAC_MLS_ORDER,
                amplitude: MLS_AMPLITUDE,
                chip_samples: ADCDAC_OVERSAMPLING,
                ..Default::default()
            };
            let bias = FrontEndConfig::default().bias_voltage;
            measure_impulse_response(
                |x| {
                    let pins = x.map(|v| v + bias);
                    let y = ac_couple(&run_converter_path(&pins, &pins, cfg, rng)?);
                    response = Some(y.clone());
                    Ok(y)
                },
                &mls,
                LATENCY_PERIODS,
                cfg.sample_rate * ADCDAC_OVERSAMPLING as f64,
            )?
        }
    };
    Ok((ir, response.expect("system closure ran")))
}

/// Chain output for the 1 kHz, 0.5 Vrms test tone (or the WAV stimulus),
/// minus the settling interval. ADC/DAC output is AC-coupled.
fn tone_response(p: &Point, stimulus: Option<&[Signal]>, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let rate = p.rate();
    let (left, right) = match stimulus {
        Some([mono]) => (mono.clone(), mono.clone()),
        Some([l, r, ..]) => (l.clone(), r.clone()),
        _ => {
            let x = generate_sine(TONE_HZ, i2s::TEST_TONE_RMS, TONE_SECONDS, rate, 0.0)?;
            (x.clone(), x)
        }
    };
    let out = match p {
        Point::I2s(cfg) => run_block_pipeline(&left, &right, cfg, &Passthrough, rng)?.0,
        Point::Adcdac(cfg) => ac_couple(&run_sample_pipeline(
            &left,
            &right,
            &FrontEndConfig::default(),
            cfg,
            rng,
        )?),
    };
    let skip = ((SETTLE_SECONDS * rate).round() as usize).min(out.len() / 2);
    Ok(out.slice(skip, out.len()))
}
