//! The strip `D \ D_delta` between the diamond and its shrunken copy.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{region_mask, GeometryConfig, Level, Region, SpaceMode};
use crate::grid::{least_squares, sphere_area, GridSpec, ScalarField};

/// Quadrature weights of the strip: diamond minus shrunken diamond. The
/// sub-sample masks nest, so the difference is already non-negative.
pub fn strip_mask(grid: &GridSpec, delta: f64, level: Level, cfg: &GeometryConfig) -> Result<ScalarField> {
    if !(delta > 0.0) {
        return Err(LabError::InvalidParameter(alloc::format!("delta = {delta} must be positive")));
    }
    let outer = region_mask(grid, &Region::Diamond, cfg)?;
    // An empty shrunken diamond just means the strip is the whole diamond.
    match region_mask(grid, &Region::DiamondDelta { delta, level }, cfg) {
        Ok(inner) => outer.sub(&inner),
        Err(LabError::EmptyRegion) => Ok(outer),
        Err(e) => Err(e),
    }
}

/// Strip measure from the quadrature masks.
pub fn strip_measure(grid: &GridSpec, delta: f64, level: Level, cfg: &GeometryConfig) -> Result<f64> {
    let mask = strip_mask(grid, delta, level, cfg)?;
    let mut total = 0.0;
    for j in 0..grid.nx {
        let vol = grid.cell_volume(j, cfg);
        for i in 0..grid.nt {
            total += mask.at(i, j) * vol;
        }
    }
    Ok(total)
}

const SIMPSON_INTERVALS: usize = 20_000;

/// Strip measure by one-dimensional quadrature of the exact cross-sections.
/// At time `t` the strip is `r1 - sqrt(t^2 + 2 theta) <= r < r1 - |t|` with
/// `theta` the level threshold.
pub fn strip_measure_exact(delta: f64, level: Level, cfg: &GeometryConfig) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(LabError::InvalidParameter(alloc::format!("delta = {delta} must be positive")));
    }
    let theta = level.threshold(delta);
    let r1 = cfg.r1();
    let (area, n) = match cfg.mode {
        SpaceMode::Cartesian1d => (2.0, 1),
        SpaceMode::RadialNd => (sphere_area(cfg.n), cfg.n as i32),
    };
    let section = |t: f64| {
        let hi = r1 - t;
        let lo = (r1 - (t * t + 2.0 * theta).sqrt()).max(0.0);
        area * (hi.powi(n) - lo.powi(n)) / n as f64
    };
    // Symmetric in t; the integrand is smooth on [0, R/2].
    let (a, b) = (0.0, 0.5 * cfg.r_tilde);
    let h = (b - a) / SIMPSON_INTERVALS as f64;
    let mut s = section(a) + section(b);
    for k in 1..SIMPSON_INTERVALS {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * section(a + k as f64 * h);
    }
    Ok(2.0 * s * h / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripScaling {
    pub deltas: Vec<f64>,
    pub level: Level,
    /// Mask quadrature on the supplied grid (empty if none was given).
    pub measures: Vec<f64>,
    pub exact: Vec<f64>,
    /// Fitted power of delta in `measures` (NaN without a grid).
    pub exponent: f64,
    pub exponent_exact: f64,
    /// `exact / (theta log(1/theta))` per delta.
    pub log_law: Vec<f64>,
}

pub fn strip_scaling(deltas: &[f64], grid: Option<&GridSpec>, level: Level, cfg: &GeometryConfig) -> Result<StripScaling> {
    if deltas.len() < 2 {
        return Err(LabError::InsufficientSweep { got: deltas.len(), need: 2 });
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let exact: Vec<f64> = deltas.iter().map(|&d| strip_measure_exact(d, level, cfg)).collect::<Result<_>>()?;
    let measures: Vec<f64> = match grid {
        Some(g) => deltas.iter().map(|&d| strip_measure(g, d, level, cfg)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let fit = |m: &[f64]| -> Result<f64> {
        let ys: Vec<f64> = m.iter().map(|v| v.ln()).collect();
        Ok(least_squares(&xs, &ys)?.0)
    };
    let exponent = if measures.is_empty() { f64::NAN } else { fit(&measures)? };
    let log_law = deltas
        .iter()
        .zip(&exact)
        .map(|(&d, &m)| {
            let th = level.threshold(d);
            m / (th * (1.0 / th).ln())
        })
        .collect();
    Ok(StripScaling { deltas: deltas.to_vec(), level, exponent_exact: fit(&exact)?, measures, exact, exponent, log_law })
}
