//! Stability functionals over manufactured solutions: the logarithmic
//! estimate near the diamond, its loglog variant on the whole diamond, and
//! the measure of the strip between the two.

mod probes;
mod strip;


use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use probes::{local_quantitative_probe, qualitative_uc_probe, LocalQuantOptions, UcProbeReport};
pub use strip::{strip_mask, strip_measure, strip_measure_exact, strip_scaling, StripScaling};

use crate::error::{LabError, Result};
use crate::geometry::{region_mask, GeometryConfig, Level, Region};
use crate::grid::{least_squares, norm_sq_masked, NormKind, ScalarField};
use crate::ledger::log_blowup;

/// Exponent of the loglog estimate.
pub const LOGLOG_EXPONENT: f64 = 4.0 / 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub delta: f64,
    pub level: Level,
    /// `|u|_{L2}` over the shrunken diamond.
    pub lhs: f64,
    /// `|u|_{H1(C)} + |f|_{L2(D)}`.
    pub obs: f64,
    /// `|u|_{H1(D)}`.
    pub total: f64,
    /// `lhs log(1 + total/obs) / total`.
    pub ratio: f64,
    /// `log B(delta)`.
    pub budget: f64,
    pub pass: bool,
}

/// The norms every functional needs, computed once per field.
struct Norms {
    obs: f64,
    total: f64,
}

fn norms(u: &ScalarField, f: &ScalarField, cfg: &GeometryConfig) -> Result<Norms> {
    if u.grid != f.grid {
        return Err(LabError::GridMismatch);
    }
    let diamond = region_mask(&u.grid, &Region::Diamond, cfg)?;
    let cyl = region_mask(&u.grid, &Region::Cylinder, cfg)?;
    let obs = norm_sq_masked(u, &cyl, NormKind::H1, cfg)?.sqrt() + norm_sq_masked(f, &diamond, NormKind::L2, cfg)?.sqrt();
    let total = norm_sq_masked(u, &diamond, NormKind::H1, cfg)?.sqrt();
    Ok(Norms { obs, total })
}

/// `lhs log(1 + total/obs) / total`, with the degenerate cases spelled out.
fn log_ratio(lhs: f64, obs: f64, total: f64) -> Result<f64> {
    if lhs == 0.0 || total == 0.0 {
        return Ok(0.0);
    }
    if obs == 0.0 {
        return Err(LabError::DegenerateObservation);
    }
    Ok(lhs * (total / obs).ln_1p() / total)
}

/// Evaluates the logarithmic stability estimate for one solution `u` with
/// `f = (box + q) u` on the diamond's bounding grid. Passes when
/// `log(ratio) <= log B(delta)`.
pub fn stability_functional(
    u: &ScalarField,
    f: &ScalarField,
    delta: f64,
    n: f64,
    level: Level,
    cfg: &GeometryConfig,
) -> Result<StabilityReport> {
    let budget = log_blowup(delta, n)?;
    let nm = norms(u, f, cfg)?;
    let inner = region_mask(&u.grid, &Region::DiamondDelta { delta, level }, cfg)?;
    let lhs = norm_sq_masked(u, &inner, NormKind::L2, cfg)?.sqrt();
    let ratio = log_ratio(lhs, nm.obs, nm.total)?;
    let pass = ratio == 0.0 || ratio.ln() <= budget;
    Ok(StabilityReport { delta, level, lhs, obs: nm.obs, total: nm.total, ratio, budget, pass })
}

/// One ensemble member's reports over a delta sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReports {
    pub label: String,
    pub reports: Vec<StabilityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub deltas: Vec<f64>,
    /// Sup of `ratio` over members, per delta.
    pub sup_ratio: Vec<f64>,
    pub violations: usize,
    /// `sup_ratio` non-decreasing as delta decreases.
    pub monotone: bool,
    pub pass: bool,
}

/// Merges per-member sweeps (all over the same deltas, in the same order).
pub fn summarize(members: &[MemberReports]) -> Result<SuiteSummary> {
    let first = members.first().ok_or(LabError::InsufficientSweep { got: 0, need: 1 })?;
    let deltas: Vec<f64> = first.reports.iter().map(|r| r.delta).collect();
    let mut sup = alloc::vec![0.0f64; deltas.len()];
    let mut violations = 0;
    for m in members {
        if m.reports.len() != deltas.len() || m.reports.iter().zip(&deltas).any(|(r, d)| r.delta != *d) {
            return Err(LabError::InvalidParameter(format!("member {} has a different delta sweep", m.label)));
        }
        for (k, r) in m.reports.iter().enumerate() {
            sup[k] = sup[k].max(r.ratio);
            violations += usize::from(!r.pass);
        }
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let monotone = order.windows(2).all(|w| sup[w[1]] >= sup[w[0]]);
    Ok(SuiteSummary { deltas, sup_ratio: sup, violations, monotone, pass: violations == 0 && monotone })
}

/// `log(1 + log(1 + total/obs))^(4/15)`; increases as `obs` decreases.
pub fn loglog_denominator(total: f64, obs: f64) -> f64 {
    if obs == 0.0 {
        return f64::INFINITY;
    }
    (total / obs).ln_1p().ln_1p().powf(LOGLOG_EXPONENT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogReport {
    /// `|u|_{L2(D)}`.
    pub lhs: f64,
    pub obs: f64,
    pub total: f64,
    pub denominator: f64,
    /// Smallest `C` with `lhs <= C total / denominator`.
    pub witnessed_c: f64,
    pub strip_deltas: Vec<f64>,
    /// `|u|_{L2(D \ D_delta)}` per delta.
    pub strip_norms: Vec<f64>,
    /// Fitted power of delta in `strip_norms`.
    pub strip_exponent: f64,
    /// Same fit after dividing by `sqrt(log(1/delta))`, the strip measure's
    /// logarithmic excess.
    pub strip_exponent_log_corrected: f64,
    /// The Sobolev step behind the `delta^(4/3)` strip bound needs `n >= 3`.
    pub heuristic: bool,
}

/// The loglog estimate on the whole diamond, plus the strip term it is
/// built from, over a sweep of `strip_deltas`.
pub fn loglog_bound(
    u: &ScalarField,
    f: &ScalarField,
    strip_deltas: &[f64],
    level: Level,
    cfg: &GeometryConfig,
) -> Result<LogLogReport> {
    if strip_deltas.len() < 2 {
        return Err(LabError::InsufficientSweep { got: strip_deltas.len(), need: 2 });
    }
    let nm = norms(u, f, cfg)?;
    let diamond = region_mask(&u.grid, &Region::Diamond, cfg)?;
    let lhs = norm_sq_masked(u, &diamond, NormKind::L2, cfg)?.sqrt();
    if lhs > 0.0 && nm.obs == 0.0 {
        return Err(LabError::DegenerateObservation);
    }
    let denominator = loglog_denominator(nm.total, nm.obs);
    let witnessed_c = if lhs == 0.0 { 0.0 } else { lhs * denominator / nm.total };

    let mut strip_norms = Vec::with_capacity(strip_deltas.len());
    for &d in strip_deltas {
        let mask = strip_mask(&u.grid, d, level, cfg)?;
        strip_norms.push(norm_sq_masked(u, &mask, NormKind::L2, cfg)?.sqrt());
    }
    let (strip_exponent, strip_exponent_log_corrected) = if strip_norms.iter().all(|&s| s > 0.0) {
        let xs: Vec<f64> = strip_deltas.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = strip_norms.iter().map(|s| s.ln()).collect();
        let yc: Vec<f64> =
            strip_deltas.iter().zip(&strip_norms).map(|(d, s)| s.ln() - 0.5 * (1.0 / d).ln().ln()).collect();
        (least_squares(&xs, &ys)?.0, least_squares(&xs, &yc)?.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LogLogReport {
        lhs,
        obs: nm.obs,
        total: nm.total,
        denominator,
        witnessed_c,
        strip_deltas: strip_deltas.to_vec(),
        strip_norms,
        strip_exponent,
        strip_exponent_log_corrected,
        heuristic: cfg.n < 3,
    })
}
