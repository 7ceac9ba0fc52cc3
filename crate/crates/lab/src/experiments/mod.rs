//! Experiment dispatch. Every experiment is a pure function of the resolved
//! config that returns its acceptance items, a JSON report body, plot-ready
//! tables and optional field dumps; writing them out is the caller's job.

mod fields;
mod ledger;
mod spectral;
mod stability;

use carleman_core::{LabError, ScalarField};
use serde::Serialize;
use serde_json::Value;

use crate::config::{Parameters, ResolvedConfig};
use crate::io::Table;

/// Verdict on one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Item {
    pub criterion: u8,
    pub title: String,
    pub pass: bool,
    /// The measured numbers behind the verdict.
    pub summary: String,
}

impl Item {
    fn new(criterion: u8, title: &str, pass: bool, summary: String) -> Self {
        Item { criterion, title: title.into(), pass, summary }
    }

    /// The one-line summary the driver prints.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {:>2} {verdict}: {} ({})", self.criterion, self.title, self.summary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub items: Vec<Item>,
    pub report: Value,
    pub tables: Vec<Table>,
    pub fields: Vec<(String, ScalarField)>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }
}

pub fn execute(cfg: &ResolvedConfig) -> Result<Outcome, LabError> {
    let grid = cfg.grid;
    let need_grid = || grid.ok_or_else(|| LabError::InvalidGrid("experiment needs a grid".into()));
    match &cfg.parameters {
        Parameters::Identity(p) => fields::identity(cfg, p, need_grid()?),
        Parameters::Carleman(p) => fields::carleman(cfg, p, need_grid()?),
        Parameters::Subelliptic(p) => fields::subelliptic(cfg, p, need_grid()?),
        Parameters::Multipliers(p) => spectral::multipliers(p, need_grid()?),
        Parameters::Wave(p) => spectral::wave(p, need_grid()?),
        Parameters::Ledger(p) => ledger::ledger(p),
        Parameters::Stability(p) => stability::stability(cfg, p),
        Parameters::LocalQuant(p) => stability::local_quant(p, need_grid()?),
        Parameters::UcProbe(p) => stability::uc_probe(cfg, p),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.4e}")
}

/// Range of a non-empty slice, formatted for summaries.
fn span(v: &[f64]) -> String {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("[{}, {}]", fmt(lo), fmt(hi))
}
