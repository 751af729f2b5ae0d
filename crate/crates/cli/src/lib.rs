//! Command-line scenarios for the audiochain simulator: latency, THD, THD+N
//! and spectrum runs on either chain, reported as CSV.

pub mod args;
pub mod error;
pub mod report;
pub mod scenario;
pub mod wav;

pub use args::{run, Cli};
pub use error::{CliError, Result};
pub use report::{read_csv, write_csv, Report};
pub use scenario::{run_scenario, Chain, Measurement, Scenario};
