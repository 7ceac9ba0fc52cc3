//! Artifact formats: CSV tables with 17 significant digits, JSON reports and
//! flat binary field dumps.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use carleman_core::{GridSpec, ScalarField};
use serde::Serialize;

/// One CSV cell. Floats are written in scientific notation with 17
/// significant digits, which round-trips every `f64`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::S(if v { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

/// A plot-ready table, written as `<name>_table.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

pub fn write_table(dir: &Path, table: &Table) -> io::Result<std::path::PathBuf> {
    let path = dir.join(format!("{}_table.csv", table.name));
    fs::write(&path, table.to_csv()?)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Flat field layout, little endian: `nt: u64`, `nx: u64`, then
/// `t_min, t_max, x_min, x_max` and the row-major samples as `f64`.
pub fn encode_field(u: &ScalarField) -> Vec<u8> {
    let g = u.grid;
    let mut out = Vec::with_capacity(48 + 8 * u.values.len());
    out.extend_from_slice(&(g.nt as u64).to_le_bytes());
    out.extend_from_slice(&(g.nx as u64).to_le_bytes());
    for v in [g.t_min, g.t_max, g.x_min, g.x_max].into_iter().chain(u.values.iter().copied()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> io::Result<ScalarField> {
    let invalid = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    if bytes.len() < 48 || !bytes.len().is_multiple_of(8) {
        return Err(invalid(format!("field dump of {} bytes", bytes.len())));
    }
    let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().expect("eight bytes") };
    let nt = u64::from_le_bytes(word(0)) as usize;
    let nx = u64::from_le_bytes(word(1)) as usize;
    let f = |k: usize| f64::from_le_bytes(word(k));
    let grid = GridSpec::new(f(2), f(3), f(4), f(5), nt, nx).map_err(|e| invalid(e.to_string()))?;
    let values: Vec<f64> = (6..bytes.len() / 8).map(f).collect();
    ScalarField::from_vec(grid, values).map_err(|e| invalid(e.to_string()))
}

pub fn write_field(path: &Path, u: &ScalarField) -> io::Result<()> {
    fs::File::create(path)?.write_all(&encode_field(u))
}

pub fn read_field(path: &Path) -> io::Result<ScalarField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}
