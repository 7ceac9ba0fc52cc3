//! Experiment driver for `carleman-core`: reads a JSON config, runs one
//! experiment and writes its report, tables and field dumps.

pub mod config;
pub mod experiments;
pub mod io;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use carleman_core::LabError;
use serde::Serialize;

use config::{ExperimentConfig, ResolvedConfig};
use experiments::{execute, Item, Outcome};

/// Environment variable that overrides `output_dir`.
pub const OUT_ENV: &str = "CARLEMAN_LAB_OUT";

#[derive(Debug)]
pub enum RunError {
    /// Unreadable or invalid configuration, or an unusable output directory.
    Config(String),
    /// A numerical guard tripped while the experiment ran.
    Guard { name: &'static str, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Guard { .. } => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Guard { name, message } => write!(f, "guard {name} tripped: {message}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<LabError> for RunError {
    fn from(e: LabError) -> Self {
        if e.is_config_error() {
            RunError::Config(e.to_string())
        } else {
            RunError::Guard { name: e.guard_name(), message: e.to_string() }
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> RunError {
    RunError::Config(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub items: Vec<Item>,
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a ResolvedConfig,
    items: &'a [Item],
    artifacts: Vec<String>,
    report: &'a serde_json::Value,
    /// The only field that differs between identical runs.
    generated_at: String,
}

/// Parses and resolves a config; `out_dir` replaces its `output_dir`.
pub fn load(text: &str, out_dir: Option<PathBuf>) -> Result<ResolvedConfig, RunError> {
    let cfg = ExperimentConfig::from_json(text).map_err(RunError::Config)?;
    let mut resolved = cfg.resolve()?;
    if let Some(dir) = out_dir {
        resolved.output_dir = dir;
    }
    Ok(resolved)
}

/// Writes every artifact of `outcome` into the config's output directory.
pub fn write_outcome(cfg: &ResolvedConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, RunError> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut artifacts = Vec::new();
    for t in &outcome.tables {
        artifacts.push(io::write_table(dir, t).map_err(|e| io_error(dir, e))?);
    }
    for (name, field) in &outcome.fields {
        let path = dir.join(format!("{name}.f64"));
        io::write_field(&path, field).map_err(|e| io_error(&path, e))?;
        artifacts.push(path);
    }
    let report_path = dir.join(format!("{}_report.json", cfg.experiment.stem()));
    let names = artifacts.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let report = Report {
        config: cfg,
        items: &outcome.items,
        artifacts: names,
        report: &outcome.report,
        generated_at: format!("unix:{stamp}"),
    };
    io::write_json(&report_path, &report).map_err(|e| io_error(&report_path, e))?;
    artifacts.push(report_path);
    Ok(artifacts)
}

/// Runs the experiment described by `text` end to end.
pub fn run(text: &str, out_dir: Option<PathBuf>) -> Result<RunSummary, RunError> {
    let cfg = load(text, out_dir)?;
    let outcome = execute(&cfg)?;
    let artifacts = write_outcome(&cfg, &outcome)?;
    Ok(RunSummary { items: outcome.items, artifacts })
}
