use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use audiochain::adcdac::SamplingSpeed;
use clap::Parser;

use crate::error::Result;
use crate::report::write_csv;
use crate::scenario::{run_scenario, Chain, Measurement, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Speed {
    Low,
    High,
}

impl From<Speed> for SamplingSpeed {
    fn from(s: Speed) -> Self {
        match s {
            Speed::Low => SamplingSpeed::Low,
            Speed::High => SamplingSpeed::High,
        }
    }
}

/// Simulate an audio I/O chain and report its latency or distortion as CSV.
#[derive(Debug, Parser)]
#[command(name = "audiochain", version)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub chain: Chain,
    #[arg(long, value_enum)]
    pub measure: Measurement,
    /// Block size for the i2s chain; repeat for a sweep (default 16, 32, 64, 128).
    #[arg(long = "block-samples", value_name = "N")]
    pub block_samples: Vec<usize>,
    /// ADC speed for the adcdac chain; repeat for a sweep (default both).
    #[arg(long = "sampling-speed", value_enum)]
    pub sampling_speed: Vec<Speed>,
    /// Codec rate (i2s) or PDB trigger rate (adcdac).
    #[arg(long = "sample-rate", value_name = "HZ")]
    pub sample_rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Stimulus for thd, thdn and spectrum (16-bit PCM, 1 V full scale).
    #[arg(long = "wav-in", value_name = "PATH")]
    pub wav_in: Option<PathBuf>,
    /// Chain output captured during the run (AC-coupled for adcdac), 16-bit PCM,
    /// 1 V full scale.
    #[arg(long = "wav-out", value_name = "PATH")]
    pub wav_out: Option<PathBuf>,
}

impl Cli {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            chain: self.chain,
            measurement: self.measure,
            block_samples: self.block_samples.clone(),
            sampling_speeds: self.sampling_speed.iter().map(|&s| s.into()).collect(),
            sample_rate: self.sample_rate,
            seed: self.seed,
            wav_in: self.wav_in.clone(),
            wav_out: self.wav_out.clone(),
        }
    }
}

/// Runs the scenario and writes its CSV, with `command_line` as the
/// leading comment.
pub fn run(cli: &Cli, command_line: &str) -> Result<()> {
    let report = run_scenario(&cli.scenario())?;
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_csv(&mut w, &report, Some(command_line))?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            write_csv(stdout.lock(), &report, Some(command_line))?;
        }
    }
    Ok(())
}
