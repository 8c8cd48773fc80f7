//! Run directories: content-addressed ids, config snapshots, CSV and JSON
//! outputs, and the per-run summary consumed by `report`.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `sha256(command, config snapshot, version)`, truncated to 16 hex digits.
pub fn run_id(command: &str, config: &ExperimentConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(config.snapshot()?.as_bytes());
    h.update([0]);
    h.update(VERSION.as_bytes());
    Ok(hex::encode(h.finalize())[..16].to_string())
}

/// One pass/fail check recorded by a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Measured value; `None` when the computation failed.
    pub value: Option<f64>,
    pub limit: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: f64, limit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value: value.is_finite().then_some(value),
            limit: limit.into(),
        }
    }
}

impl Check {
    pub fn line(&self) -> String {
        let value = self.value.map_or("-".to_string(), |v| format!("{v:.6e}"));
        format!(
            "{} {}: {value} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.limit
        )
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub command: String,
    pub version: String,
    /// First numerical failure, if the command stopped early.
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

/// An output directory being filled by a command.
#[derive(Debug)]
pub struct RunArtifact {
    pub id: String,
    pub dir: PathBuf,
    pub command: String,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    log: String,
}

impl RunArtifact {
    /// Creates `out/<id>` and writes the config snapshot.
    pub fn create(out: &Path, command: &str, config: &ExperimentConfig) -> Result<Self> {
        let id = run_id(command, config)?;
        let dir = out.join(&id);
        std::fs::create_dir_all(&dir)?;
        let mut run = Self {
            id,
            dir,
            command: command.into(),
            checks: Vec::new(),
            files: Vec::new(),
            log: String::new(),
        };
        run.write_text("config.toml", &config.snapshot()?)?;
        Ok(run)
    }

    pub fn log(&mut self, line: impl AsRef<str>) {
        self.log.push_str(line.as_ref());
        self.log.push('\n');
    }

    pub fn check(&mut self, check: Check) {
        self.log(check.line());
        self.checks.push(check);
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.into());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
        self.write_text(name, &text)
    }

    /// Writes a CSV table; numbers use the shortest round-trip representation.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.into());
        }
        Ok(())
    }

    /// Writes `log.txt` and `summary.json`.
    pub fn finish(mut self, error: Option<&Error>) -> Result<RunSummary> {
        if let Some(e) = error {
            self.log(format!("error: {e}"));
        }
        let log = std::mem::take(&mut self.log);
        self.write_text("log.txt", &log)?;
        let mut files = self.files.clone();
        files.push("summary.json".into());
        let summary = RunSummary {
            id: self.id.clone(),
            command: self.command.clone(),
            version: VERSION.into(),
            error: error.map(|e| e.to_string()),
            checks: self.checks.clone(),
            files,
        };
        self.write_json("summary.json", &summary)?;
        Ok(summary)
    }
}

/// Reads the summary of an earlier run.
pub fn load_summary(out: &Path, id: &str) -> Result<RunSummary> {
    let path = out.join(id).join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingRun(id.into()))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Aggregate of several runs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub runs: Vec<RunSummary>,
    pub passed: usize,
    pub failed: usize,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.runs.iter().all(|r| r.error.is_none())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            writeln!(s, "{} {}", r.command, r.id).unwrap();
            if let Some(e) = &r.error {
                writeln!(s, "  error: {e}").unwrap();
            }
            for c in &r.checks {
                writeln!(s, "  {}", c.line()).unwrap();
            }
        }
        writeln!(s, "{} passed, {} failed", self.passed, self.failed).unwrap();
        s
    }
}

/// Collects the summaries of `ids`; an empty list gives an empty report.
pub fn build_report(out: &Path, ids: &[String]) -> Result<Report> {
    let runs = ids.iter().map(|id| load_summary(out, id)).collect::<Result<Vec<_>>>()?;
    let passed = runs.iter().flat_map(|r| &r.checks).filter(|c| c.pass).count();
    let failed = runs.iter().flat_map(|r| &r.checks).filter(|c| !c.pass).count();
    Ok(Report { runs, passed, failed })
}
