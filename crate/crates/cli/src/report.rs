//! Report files: one JSON and/or CSV per check plus a summary.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subrep_core::{CheckReport, Sample, Status};

use crate::config::Format;

/// One CSV line per sample; `point` joins coordinates with `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub check_id: String,
    pub index: usize,
    pub point: String,
    pub param: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub error: f64,
}

impl CsvRow {
    pub fn to_sample(&self) -> Sample {
        let point = if self.point.is_empty() {
            Vec::new()
        } else {
            self.point.split(';').map(|v| v.parse().unwrap_or(f64::NAN)).collect()
        };
        Sample {
            point,
            param: self.param,
            lhs: self.lhs,
            rhs: self.rhs,
            ratio: self.ratio,
            error: self.error,
        }
    }
}

pub fn csv_rows(report: &CheckReport) -> Vec<CsvRow> {
    report
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| CsvRow {
            check_id: report.check_id.to_string(),
            index: i,
            point: s.point.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
            param: s.param,
            lhs: s.lhs,
            rhs: s.rhs,
            ratio: s.ratio,
            error: s.error,
        })
        .collect()
}

pub fn write_csv(report: &CheckReport, path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in csv_rows(report) {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> io::Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(io::Error::other)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub check_id: String,
    pub status: Status,
    pub pass: bool,
    pub empirical_constant: Option<f64>,
    pub theoretical_constant: Option<f64>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<SummaryEntry>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Writes every report in the requested formats and `summary.json`.
pub fn write_all(reports: &[CheckReport], dir: &Path, formats: &[Format]) -> io::Result<Summary> {
    fs::create_dir_all(dir)?;
    let mut checks = Vec::with_capacity(reports.len());
    for r in reports {
        let mut files = Vec::new();
        for fmt in formats {
            let path = match fmt {
                Format::Json => {
                    let p = dir.join(format!("{}.json", r.check_id));
                    let text = serde_json::to_string_pretty(r).map_err(io::Error::other)?;
                    fs::write(&p, text + "\n")?;
                    p
                }
                Format::Csv => {
                    let p = dir.join(format!("{}.csv", r.check_id));
                    write_csv(r, &p)?;
                    p
                }
            };
            files.push(path);
        }
        checks.push(SummaryEntry {
            check_id: r.check_id.to_string(),
            status: r.status,
            pass: r.pass,
            empirical_constant: r.empirical_constant.is_finite().then_some(r.empirical_constant),
            theoretical_constant: r.theoretical_constant,
            wall_time_s: r.wall_time_s,
            files,
        });
    }
    let failed = reports.iter().filter(|r| r.status == Status::Fail).count();
    let summary = Summary {
        total: reports.len(),
        passed: reports.len() - failed,
        failed,
        checks,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    fs::write(dir.join("summary.json"), text + "\n")?;
    Ok(summary)
}
