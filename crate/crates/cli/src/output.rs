//! Run directory layout: `series_*.csv`, `report.json` and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";

/// One CSV time series. Floats are written with `{:.17e}` so that the text
/// round-trips to the same bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// File stem after the `series_` prefix.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.17e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Series {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("series_{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Incomplete,
}

/// Monitor flags raised during a run. `true` means the monitor fired.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Monitors {
    pub decay: bool,
    /// Largest seam mismatch of a reconstructed frame, when one was built on
    /// a circle.
    pub closure: Option<f64>,
    pub blow_up: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// The merged configuration in config-file syntax.
    pub config_text: String,
    pub status: RunStatus,
    pub started_unix: f64,
    pub wall_seconds: Option<f64>,
    pub outputs: Vec<String>,
    pub monitors: Monitors,
    pub error: Option<String>,
}

/// An output directory with a live manifest.
pub struct RunDir {
    path: PathBuf,
    manifest: Manifest,
    clock: Instant,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

impl RunDir {
    /// Creates the directory and writes the initial manifest.
    pub fn create(path: &Path, config: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: config.experiment.to_string(),
            seed: config.seed,
            config: config.clone(),
            config_text: config.to_config_text(),
            status: RunStatus::Running,
            started_unix,
            wall_seconds: None,
            outputs: Vec::new(),
            monitors: Monitors::default(),
            error: None,
        };
        let dir = Self {
            path: path.to_path_buf(),
            manifest,
            clock: Instant::now(),
        };
        dir.flush()?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn flush(&self) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.manifest).map_err(|source| CliError::Json {
            what: "manifest",
            source,
        })?;
        write(&self.path.join(MANIFEST), json.as_bytes())
    }

    fn record(&mut self, name: String) -> Result<()> {
        if !self.manifest.outputs.contains(&name) {
            self.manifest.outputs.push(name);
        }
        self.flush()
    }

    pub fn write_series(&mut self, s: &Series) -> Result<()> {
        let name = s.file_name();
        write(&self.path.join(&name), s.to_csv().as_bytes())?;
        self.record(name)
    }

    pub fn write_report<T: Serialize>(&mut self, report: &T) -> Result<()> {
        let json = serde_json::to_string_pretty(report).map_err(|source| CliError::Json {
            what: "report",
            source,
        })?;
        write(&self.path.join(REPORT), json.as_bytes())?;
        self.record(REPORT.into())
    }

    pub fn finish(mut self, monitors: Monitors, error: Option<String>) -> Result<Manifest> {
        self.manifest.monitors = monitors;
        self.manifest.status = if error.is_none() {
            RunStatus::Complete
        } else {
            RunStatus::Incomplete
        };
        self.manifest.error = error;
        self.manifest.wall_seconds = Some(self.clock.elapsed().as_secs_f64());
        self.flush()?;
        Ok(self.manifest)
    }
}
