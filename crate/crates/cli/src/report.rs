//! CSV reports: a header line, then one row per sweep point or spectrum bin.
//!
//! Reals are written with 17 significant digits so that parsing a report
//! recovers every value exactly.

use std::io::{Read, Write};

use crate::error::{CliError, Result};

pub const LATENCY_HEADER: [&str; 2] = ["parameter", "latency_seconds"];
pub const DISTORTION_HEADER: [&str; 3] = ["parameter", "thd_db", "thdn_db"];
pub const SPECTRUM_HEADER: [&str; 2] = ["frequency_hz", "power_dbv"];

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRow {
    pub parameter: String,
    pub latency_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionRow {
    pub parameter: String,
    pub thd_db: f64,
    pub thdn_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub frequency_hz: f64,
    pub power_dbv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Latency(Vec<LatencyRow>),
    Distortion(Vec<DistortionRow>),
    Spectrum(Vec<SpectrumRow>),
}

impl Report {
    pub fn len(&self) -> usize {
        match self {
            Report::Latency(r) => r.len(),
            Report::Distortion(r) => r.len(),
            Report::Spectrum(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn header(&self) -> &'static [&'static str] {
        match self {
            Report::Latency(_) => &LATENCY_HEADER,
            Report::Distortion(_) => &DISTORTION_HEADER,
            Report::Spectrum(_) => &SPECTRUM_HEADER,
        }
    }
}

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `report`, preceded by `# comment` when one is given.
pub fn write_csv<W: Write>(mut out: W, report: &Report, comment: Option<&str>) -> Result<()> {
    if report.is_empty() {
        return Err(CliError::Usage("refusing to write an empty report".into()));
    }
    if let Some(c) = comment {
        writeln!(out, "# {}", c.replace('\n', " "))?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(report.header())?;
    match report {
        Report::Latency(rows) => {
            for r in rows {
                w.write_record([r.parameter.clone(), format_real(r.latency_seconds)])?;
            }
        }
        Report::Distortion(rows) => {
            for r in rows {
                w.write_record([
                    r.parameter.clone(),
                    format_real(r.thd_db),
                    format_real(r.thdn_db),
                ])?;
            }
        }
        Report::Spectrum(rows) => {
            for r in rows {
                w.write_record([format_real(r.frequency_hz), format_real(r.power_dbv)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a report written by [`write_csv`]; `#` lines are skipped and the
/// header picks the report kind.
pub fn read_csv<R: Read>(input: R) -> Result<Report> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let records = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let bad = |what: &str| CliError::Usage(format!("malformed report: {what}"));
    let real = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(&format!("not a number: {s:?}")))
    };

    if header == LATENCY_HEADER {
        let rows = records
            .iter()
            .map(|rec| {
                Ok(LatencyRow {
                    parameter: rec[0].to_owned(),
                    latency_seconds: real(&rec[1])?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Report::Latency(rows))
    } else if header == DISTORTION_HEADER {
        let rows = records
            .iter()
            .map(|rec| {
                Ok(DistortionRow {
                    parameter: rec[0].to_owned(),
                    thd_db: real(&rec[1])?,
                    thdn_db: real(&rec[2])?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Report::Distortion(rows))
    } else if header == SPECTRUM_HEADER {
        let rows = records
            .iter()
            .map(|rec| {
                Ok(SpectrumRow {
                    frequency_hz: real(&rec[0])?,
                    power_dbv: real(&rec[1])?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Report::Spectrum(rows))
    } else {
        Err(bad(&format!("unknown header {header:?}")))
    }
}
