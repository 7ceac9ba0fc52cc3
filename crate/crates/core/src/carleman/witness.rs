//! Inequality witnesses: for a given test function, both sides of an
//! estimate are evaluated over a tau sweep and the smallest constant that
//! makes it hold is reported.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{conjugated_core, preflight, CarlemanParams, SUPPORT_TOL};
use crate::error::{LabError, Result};
use crate::geometry::{foliation_phi, region_mask, Region};
use crate::grid::{apply_box, gradient, integrate, ScalarField};
use crate::multipliers::{Multiplier, MultiplierSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub gamma: f64,
    pub epsilon: f64,
    pub tau_values: Vec<f64>,
    pub lhs: Vec<f64>,
    /// Right-hand side without the unknown constant.
    pub rhs: Vec<f64>,
    /// `lhs / rhs` per tau (zero where both vanish).
    pub per_tau_constant: Vec<f64>,
    /// Supremum of `per_tau_constant`.
    pub witnessed_constant: f64,
    /// `fine / coarse` ratios of the witnessed quantity, filled by
    /// [`compare_refinement`].
    pub refinement_ratios: Vec<f64>,
    /// Largest decay rate admissible at each tau (`None`: any rate works).
    #[serde(default)]
    pub a_per_tau: Vec<Option<f64>>,
    /// Smallest entry of `a_per_tau`: the rate that holds across the sweep.
    #[serde(default)]
    pub a_hat: Option<f64>,
    pub tau_floor: f64,
    pub tau_floor_met: bool,
    pub pass: bool,
}

impl WitnessReport {
    /// The quantity compared under refinement: `a_hat` when the report has
    /// one, otherwise the witnessed constant.
    pub fn headline(&self) -> f64 {
        match self.a_hat {
            Some(a) => a,
            None if !self.a_per_tau.is_empty() => f64::INFINITY,
            None => self.witnessed_constant,
        }
    }
}

/// Merges a coarse and a fine report of the same experiment: records the
/// ratio of headline values (and, for the weighted estimate, of the witnessed
/// prefactor) and fails unless the headline ratio is within `1 +- tolerance`.
/// Two unbounded headlines count as agreeing.
pub fn compare_refinement(coarse: &WitnessReport, fine: &WitnessReport, tolerance: f64) -> WitnessReport {
    let (a, b) = (coarse.headline(), fine.headline());
    let ratio = if a == b { 1.0 } else { b / a };
    let mut out = fine.clone();
    out.refinement_ratios.push(ratio);
    if !fine.a_per_tau.is_empty() && coarse.witnessed_constant > 0.0 {
        out.refinement_ratios.push(fine.witnessed_constant / coarse.witnessed_constant);
    }
    out.pass = coarse.pass && fine.pass && ratio.is_finite() && (ratio - 1.0).abs() <= tolerance;
    out
}

/// Checks that the samples of `v` above the noise floor lie in
/// `{phi >= level} ∩ {r >= r0}` up to one cell of slack.
fn check_admissible(v: &ScalarField, params: &CarlemanParams, level: f64) -> Result<()> {
    let g = v.grid;
    let cfg = &params.geometry;
    let floor = SUPPORT_TOL * v.max_abs();
    let h = g.dt().max(g.dx());
    for i in 0..g.nt {
        let t = g.t(i);
        for j in 0..g.nx {
            if v.at(i, j).abs() <= floor || v.at(i, j) == 0.0 {
                continue;
            }
            let r = cfg.radius(g.x(j));
            let slack = h * (t.abs() + (r - cfg.r1()).abs());
            if foliation_phi(t, r, cfg) < level - slack || r < cfg.r0_inner() - h {
                return Err(LabError::SupportViolation(format!(
                    "v = {:.3e} at (t, r) = ({t}, {r}) outside phi >= {level}, r >= {}",
                    v.at(i, j),
                    cfg.r0_inner()
                )));
            }
        }
    }
    Ok(())
}

fn sq_integral(f: &ScalarField, mask: Option<&ScalarField>, params: &CarlemanParams) -> f64 {
    integrate(&f.map(|v| v * v), mask, &params.geometry)
}

fn validate_sweep(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(LabError::InsufficientSweep { got: 0, need: 1 });
    }
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(LabError::InvalidParameter(format!("tau = {t}")));
    }
    Ok(())
}

/// Witness for
/// `gamma tau^3 int |v|^2 + tau int |grad v|^2 <= C (int |box_{ell,eps} v|^2 + tau int |d_t v|^2)`.
/// Requires `eps <= gamma eps_0` and `tau >= C_floor / gamma` for every
/// swept tau. A single report passes when every ratio is finite; refinement
/// stability is judged by [`compare_refinement`].
pub fn subelliptic_check(v: &ScalarField, params: &CarlemanParams, tau_sweep: &[f64]) -> Result<WitnessReport> {
    preflight(v, params)?;
    validate_sweep(tau_sweep)?;
    let gamma = params.gamma;
    if params.epsilon > gamma * params.epsilon0 * (1.0 + 1e-12) {
        return Err(LabError::PreconditionViolated(format!(
            "epsilon = {} exceeds gamma * eps0 = {}",
            params.epsilon,
            gamma * params.epsilon0
        )));
    }
    let floor = params.tau_floor_multiplier / gamma;
    if let Some(t) = tau_sweep.iter().find(|t| **t < floor) {
        return Err(LabError::PreconditionViolated(format!("tau = {t} below the floor {floor}")));
    }
    check_admissible(v, params, gamma)?;

    let grad = gradient(v)?;
    let l2 = sq_integral(v, None, params);
    let gt = sq_integral(&grad.t, None, params);
    let gx = sq_integral(&grad.x, None, params);

    let mut report = empty_report(params, params.epsilon, tau_sweep, floor, true);
    for &tau in tau_sweep {
        let p = params.with_tau(tau);
        let boxed = conjugated_core(v, &p, params.epsilon);
        let lhs = gamma * tau.powi(3) * l2 + tau * (gt + gx);
        let rhs = sq_integral(&boxed, None, &p) + tau * gt;
        push(&mut report, lhs, rhs);
    }
    report.pass = report.witnessed_constant.is_finite();
    Ok(report)
}

fn empty_report(params: &CarlemanParams, eps: f64, taus: &[f64], floor: f64, met: bool) -> WitnessReport {
    WitnessReport {
        gamma: params.gamma,
        epsilon: eps,
        tau_values: taus.to_vec(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        per_tau_constant: Vec::new(),
        witnessed_constant: 0.0,
        refinement_ratios: Vec::new(),
        a_per_tau: Vec::new(),
        a_hat: None,
        tau_floor: floor,
        tau_floor_met: met,
        pass: false,
    }
}

fn push(report: &mut WitnessReport, lhs: f64, rhs: f64) {
    let k = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    report.lhs.push(lhs);
    report.rhs.push(rhs);
    report.per_tau_constant.push(k);
    report.witnessed_constant = report.witnessed_constant.max(k);
}

/// Free constants of the weighted estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// The constant `C` in the prefactor `C / gamma`.
    pub c_const: f64,
    /// Decay rate used when reporting the witnessed prefactor.
    pub a_ref: f64,
    /// Optional bounded potential: the operator becomes `box + q`.
    #[serde(skip)]
    pub potential: Option<ScalarField>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { c_const: 1.0, a_ref: 1.0, potential: None }
    }
}

/// Witness for the weighted estimate
/// `tau^3 ||W e^{tau phi} u||^2 + tau ||grad W e^{tau phi} u||^2
///   <= (C/gamma)(||W e^{tau phi} box u||^2_{phi > gamma/2} + e^{-a gamma^2 tau} ||e^{tau phi} u||^2_{H1})`
/// with `W = exp(-eps D_t^2 / 2 tau)` and `eps = gamma eps_0`.
///
/// For each tau the largest admissible rate `a` is solved for in closed
/// form; `a_hat` is the minimum over the sweep and the check passes when it
/// is positive (or unconstrained). `per_tau_constant` holds
/// `lhs / (P + e^{-a_ref gamma^2 tau} H)`, the prefactor witnessed at
/// `a_ref`. The weight is applied as `e^{tau (phi - max_supp phi)}`; this
/// scales both sides by the same factor.
pub fn carleman_estimate_check(
    u: &ScalarField,
    params: &CarlemanParams,
    tau_sweep: &[f64],
    opts: &EstimateOptions,
) -> Result<WitnessReport> {
    preflight(u, params)?;
    validate_sweep(tau_sweep)?;
    if !(opts.c_const > 0.0) {
        return Err(LabError::InvalidParameter(format!("C = {}", opts.c_const)));
    }
    if let Some(q) = &opts.potential {
        if q.grid != u.grid {
            return Err(LabError::GridMismatch);
        }
    }
    let gamma = params.gamma;
    let eps = gamma * params.epsilon0;
    let floor = params.tau_floor_multiplier / gamma.powi(8);
    let met = tau_sweep.iter().all(|t| *t >= floor);
    let mut report = empty_report(params, eps, tau_sweep, floor, met);
    if u.is_zero() {
        for _ in tau_sweep {
            push(&mut report, 0.0, 0.0);
            report.a_per_tau.push(None);
        }
        report.pass = true;
        return Ok(report);
    }
    check_admissible(u, params, gamma)?;

    let g = u.grid;
    let cfg = params.geometry;
    let phi = ScalarField::from_fn(g, |t, x| foliation_phi(t, cfg.radius(x), &cfg));
    let floor_u = SUPPORT_TOL * u.max_abs();
    let supp_max = phi
        .values
        .iter()
        .zip(&u.values)
        .filter(|(_, v)| v.abs() > floor_u)
        .map(|(p, _)| *p)
        .fold(f64::NEG_INFINITY, f64::max);
    let grid_max = phi.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mask = region_mask(&g, &Region::PhiSuperlevel { gamma: 0.5 * gamma }, &cfg)?;
    let boxed = apply_box(u, opts.potential.as_ref(), &cfg)?;

    for &tau in tau_sweep {
        if tau * (grid_max - supp_max) > 700.0 {
            return Err(LabError::NumericalOverflow(format!(
                "e^(tau (phi - max_supp phi)) reaches e^{:.0} on the grid at tau = {tau}; \
                 lower tau or shrink the domain",
                tau * (grid_max - supp_max)
            )));
        }
        let w = Multiplier::new(MultiplierSpec::GaussianWeight { epsilon: eps, tau })?;
        let weight = phi.map(|p| (tau * (p - supp_max)).exp());
        let f = weight.mul(u)?;
        let wf = w.apply(&f)?;
        let gwf = gradient(&wf)?;
        let lhs = tau.powi(3) * sq_integral(&wf, None, params)
            + tau * (sq_integral(&gwf.t, None, params) + sq_integral(&gwf.x, None, params));
        let wbox = w.apply(&weight.mul(&boxed)?)?;
        let p = sq_integral(&wbox, Some(&mask), params);
        let gf = gradient(&f)?;
        let h = sq_integral(&f, None, params) + sq_integral(&gf.t, None, params) + sq_integral(&gf.x, None, params);

        let excess = gamma * lhs / opts.c_const - p;
        let a_max = if excess <= 0.0 { None } else { Some(-(excess / h).ln() / (gamma * gamma * tau)) };
        report.a_per_tau.push(a_max);
        push(&mut report, lhs, p + (-opts.a_ref * gamma * gamma * tau).exp() * h);
    }
    report.a_hat = report.a_per_tau.iter().flatten().cloned().reduce(f64::min);
    report.pass = report.a_hat.is_none_or(|a| a > 0.0);
    Ok(report)
}
