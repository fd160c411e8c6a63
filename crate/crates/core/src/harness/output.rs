use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::Report;
use crate::error::Result;

/// Writes `header` and `rows` as CSV.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    let (header, rows) = report.rows();
    write_csv(path, &header, &rows)
}

/// Run manifest. Contains no timestamps, so identical runs produce identical
/// manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub crate_name: &'static str,
    pub crate_version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub outputs: Vec<String>,
    pub passed: bool,
    pub reports: Vec<ReportSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub name: String,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, threads: Option<usize>) -> Self {
        Manifest {
            crate_name: env!("CARGO_PKG_NAME"),
            crate_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: cfg.hash(),
            seed: cfg.seed,
            threads,
            outputs: Vec::new(),
            passed: true,
            reports: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.outputs.push(name);
    }

    pub fn record_report(&mut self, r: &Report) {
        self.passed &= r.passed();
        self.reports.push(ReportSummary {
            name: r.name.clone(),
            passed: r.passed(),
            failed_checks: r.failures().map(|c| c.name.clone()).collect(),
        });
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| crate::LabError::Config(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
