//! CSV tables and JSON sidecars.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{Experiment, SimConfig};

/// A CSV table held as already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        Ok(String::from_utf8(bytes)?)
    }

    /// Index of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Outcome of one experiment: named tables, a JSON summary and printable lines.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    /// `(file stem, table)` pairs.
    pub tables: Vec<(String, Table)>,
    pub summary: serde_json::Value,
    pub lines: Vec<String>,
    /// Hard failures that should produce a nonzero exit status.
    pub failed: bool,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'static str,
    config: &'a SimConfig,
    files: Vec<String>,
    summary: &'a serde_json::Value,
}

/// Writes every table as `<stem>.csv` and one `<experiment>.json` sidecar.
pub fn write_report(report: &Report, config: &SimConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for (stem, table) in &report.tables {
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, table.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    let mut resolved = config.clone();
    resolved.experiment = Some(report.experiment);
    resolved.monte_carlo.threads = None;
    let sidecar = Sidecar {
        experiment: report.experiment.name(),
        config: &resolved,
        files: report.tables.iter().map(|(s, _)| format!("{s}.csv")).collect(),
        summary: &report.summary,
    };
    let path = dir.join(format!("{}.json", report.experiment.file_stem()));
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<usize>) -> String {
    v.map(|t| t.to_string()).unwrap_or_default()
}
