//! Per-epsilon detection statistics and their CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::Suite;
use crate::codes::ValidityReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "epsilon,passes,fault_passes,detected,missed,false_positives,mults_measured,mults_paper,mults_dense";

/// Aggregates for one insertion probability.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub passes: u64,
    /// Total individual faults injected.
    pub faults_injected: u64,
    /// Passes that received at least one fault.
    pub fault_passes: u64,
    /// Fault passes in which every faulted section raised a detection.
    pub detected: u64,
    /// Fault passes with at least one faulted section left undetected.
    pub missed: u64,
    /// Fault-free passes that raised a detection.
    pub false_positives: u64,
    /// Sections (checked computations) that received faults.
    pub faulted_sections: u64,
    pub detected_sections: u64,
    /// Faults that landed in sections which raised a detection.
    pub faults_in_detected_sections: u64,
    /// Detections in fault-free sections of fault passes.
    pub spurious_section_flags: u64,
    /// Computations redone after a detection.
    pub recomputations: u64,
    /// Multiplications measured in one pass's primary checked product.
    pub mults_measured: u64,
    pub mults_paper: u64,
    pub mults_dense: u64,
}

impl EpsilonRow {
    pub fn detection_rate(&self) -> f64 {
        if self.fault_passes == 0 {
            1.0
        } else {
            self.detected as f64 / self.fault_passes as f64
        }
    }

    pub fn csv_fields(&self) -> CsvRow {
        CsvRow {
            epsilon: self.epsilon,
            passes: self.passes,
            fault_passes: self.fault_passes,
            detected: self.detected,
            missed: self.missed,
            false_positives: self.false_positives,
            mults_measured: self.mults_measured,
            mults_paper: self.mults_paper,
            mults_dense: self.mults_dense,
        }
    }
}

/// The columns written to the CSV report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub epsilon: f64,
    pub passes: u64,
    pub fault_passes: u64,
    pub detected: u64,
    pub missed: u64,
    pub false_positives: u64,
    pub mults_measured: u64,
    pub mults_paper: u64,
    pub mults_dense: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub suite: Suite,
    pub validity: ValidityReport,
    pub tau_act: Option<f64>,
    /// Sorted by epsilon, ascending.
    pub rows: Vec<EpsilonRow>,
}

impl DetectionReport {
    pub fn total_missed(&self) -> u64 {
        self.rows.iter().map(|r| r.missed).sum()
    }

    pub fn total_false_positives(&self) -> u64 {
        self.rows.iter().map(|r| r.false_positives).sum()
    }
}

pub fn write_report_csv<W: Write>(mut w: W, report: &DetectionReport) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.epsilon,
            r.passes,
            r.fault_passes,
            r.detected,
            r.missed,
            r.false_positives,
            r.mults_measured,
            r.mults_paper,
            r.mults_dense
        )?;
    }
    Ok(())
}

pub fn emit_report(report: &DetectionReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_report_csv(&mut w, report)?;
    w.flush()?;
    Ok(())
}

pub fn parse_report_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => {
            return Err(Error::Format {
                line: 1,
                msg: "missing report header".into(),
            })
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |msg: String| Error::Format { line: i + 2, msg };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(err(format!("expected 9 fields, found {}", f.len())));
            }
            let int = |j: usize| -> Result<u64> {
                f[j].parse()
                    .map_err(|_| err(format!("bad integer {:?}", f[j])))
            };
            Ok(CsvRow {
                epsilon: f[0]
                    .parse()
                    .map_err(|_| err(format!("bad epsilon {:?}", f[0])))?,
                passes: int(1)?,
                fault_passes: int(2)?,
                detected: int(3)?,
                missed: int(4)?,
                false_positives: int(5)?,
                mults_measured: int(6)?,
                mults_paper: int(7)?,
                mults_dense: int(8)?,
            })
        })
        .collect()
}
