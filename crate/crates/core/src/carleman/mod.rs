//! The Carleman equality for the conjugated wave operator, the quadratic forms
//! that make it coercive, and numerical witnesses for the resulting
//! inequalities.
//!
//! Conventions: the Lorentzian metric is `g = -dt^2 + dr^2` (plus the round
//! metric on spheres, which radial fields never see), so that
//! `Delta_g f = -f_tt + f_rr + (c / r) f_r` with `c = n - 1` in radial mode.
//! With this trace convention `Delta_g = -box`, where [`crate::grid::apply_box`]
//! evaluates `box = d_t^2 - Laplacian`. The weight is `ell = tau phi` (or
//! `tau psi`, `psi = phi - gamma`, which only shifts `ell` by a constant).

mod bumps;
mod witness;

pub use bumps::{battery, BumpSpec, BumpWindow};
pub use witness::{
    carleman_estimate_check, compare_refinement, subelliptic_check, EstimateOptions, WitnessReport,
};

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{foliation_phi, GeometryConfig};
use crate::grid::{d1, d2, integrate, GridSpec, ScalarField, VectorField};
use crate::multipliers::{Multiplier, MultiplierSpec};

/// Samples below this fraction of the peak count as zero in support checks.
pub(crate) const SUPPORT_TOL: f64 = 1e-12;
/// Minimum clearance, in cells, between a test function and the grid edge.
pub const SUPPORT_CELLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanParams {
    pub tau: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Constant added to `sigma`; zero reproduces `a = 3 tau / 2`.
    #[serde(default)]
    pub sigma_shift: f64,
    /// Use `ell = tau (phi - gamma)` instead of `tau phi`.
    #[serde(default)]
    pub use_psi: bool,
    /// Scale `eps_0` in the admissibility rule `eps <= gamma eps_0`.
    #[serde(default = "default_eps0")]
    pub epsilon0: f64,
    /// Multiplier `C` of the tau floor.
    #[serde(default = "default_floor")]
    pub tau_floor_multiplier: f64,
    #[serde(default)]
    pub geometry: GeometryConfig,
}

fn default_eps0() -> f64 {
    0.05
}

fn default_floor() -> f64 {
    1.0
}

impl Default for CarlemanParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            epsilon: 0.01,
            gamma: 0.2,
            sigma_shift: 0.0,
            use_psi: false,
            epsilon0: default_eps0(),
            tau_floor_multiplier: default_floor(),
            geometry: GeometryConfig::default(),
        }
    }
}

/// Closed-form weight quantities at one space-time point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointWeights {
    pub phi: f64,
    /// `r - r1`
    pub s: f64,
    pub q: f64,
    pub sigma: f64,
    pub sigma_r: f64,
    pub lap_sigma: f64,
}

impl CarlemanParams {
    pub fn new(tau: f64, epsilon: f64, gamma: f64, geometry: GeometryConfig) -> Result<Self> {
        let p = Self { tau, epsilon, gamma, geometry, ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let bad = |name: &str, v: f64| LabError::InvalidParameter(format!("{name} = {v}"));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(bad("tau", self.tau));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(bad("epsilon", self.epsilon));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(bad("gamma", self.gamma));
        }
        if !(self.epsilon0 > 0.0) {
            return Err(bad("epsilon0", self.epsilon0));
        }
        if !(self.tau_floor_multiplier > 0.0) {
            return Err(bad("tau_floor_multiplier", self.tau_floor_multiplier));
        }
        if !self.sigma_shift.is_finite() {
            return Err(bad("sigma_shift", self.sigma_shift));
        }
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }

    /// `a = sigma - Delta ell`; equals `3 tau / 2` unless `sigma` is shifted.
    pub fn a_choice(&self) -> f64 {
        1.5 * self.tau + self.sigma_shift
    }

    /// `ell` at a point.
    pub fn ell(&self, t: f64, r: f64) -> f64 {
        let off = if self.use_psi { self.gamma } else { 0.0 };
        self.tau * (foliation_phi(t, r, &self.geometry) - off)
    }

    /// `sigma` at a point.
    pub fn sigma(&self, t: f64, r: f64) -> f64 {
        self.weights(t, r).sigma
    }

    pub(crate) fn weights(&self, t: f64, r: f64) -> PointWeights {
        let tau = self.tau;
        let c = self.geometry.radial_coeff();
        let r1 = self.geometry.r1();
        let s = r - r1;
        let phi = foliation_phi(t, r, &self.geometry);
        let lap_phi = 2.0 + c * s / r;
        let lap_ell = tau * lap_phi;
        // f = -c r1 / r is the non-constant part of Delta phi.
        let sigma_r = tau * c * r1 / (r * r);
        let lap_sigma = tau * c * r1 * (c - 2.0) / (r * r * r);
        PointWeights {
            phi,
            s,
            q: 2.0 * tau * tau * phi - lap_ell,
            sigma: self.a_choice() + lap_ell,
            sigma_r,
            lap_sigma,
        }
    }
}

/// Every term of the pointwise Carleman equality, on the grid of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityBreakdown {
    /// `|e^ell Delta (e^-ell v)|^2 / 2`
    pub lhs: ScalarField,
    pub q_plus_term: ScalarField,
    pub q_minus_term: ScalarField,
    pub div_b_term: ScalarField,
    pub r_term: ScalarField,
    /// `|(Delta + q + sigma) v|^2 / 2`
    pub square1: ScalarField,
    /// `|(L + sigma) v|^2 / 2`
    pub square2: ScalarField,
    pub residual_pointwise: f64,
    pub residual_integrated: f64,
    /// `residual_integrated` divided by `|int lhs|` (zero for `v = 0`).
    pub relative_integrated: f64,
}

fn require_positive_radius(g: &GridSpec) -> Result<()> {
    if g.x_min <= 0.0 {
        return Err(LabError::InvalidGrid(format!(
            "Carleman operators need a grid with x_min > 0 (got {})",
            g.x_min
        )));
    }
    Ok(())
}

/// Fails if `v` has samples above the noise floor within `cells` of an edge.
pub fn check_interior_support(v: &ScalarField, cells: usize) -> Result<()> {
    let g = v.grid;
    let max = v.max_abs();
    if max == 0.0 {
        return Ok(());
    }
    let floor = SUPPORT_TOL * max;
    for i in 0..g.nt {
        for j in 0..g.nx {
            let edge = i.min(g.nt - 1 - i).min(j).min(g.nx - 1 - j);
            if edge < cells && v.at(i, j).abs() > floor {
                return Err(LabError::SupportViolation(format!(
                    "|v| = {:.3e} at ({}, {}), {} cells from the edge",
                    v.at(i, j).abs(),
                    g.t(i),
                    g.x(j),
                    edge
                )));
            }
        }
    }
    Ok(())
}

fn preflight(v: &ScalarField, params: &CarlemanParams) -> Result<()> {
    params.validate()?;
    v.grid.validate()?;
    require_positive_radius(&v.grid)?;
    check_interior_support(v, SUPPORT_CELLS)
}

/// Evaluates both sides of the pointwise equality
/// `|e^ell Delta(e^-ell v)|^2/2 = Q+(grad v) + Q-(grad ell) v^2 + div B + R
///  + |(Delta+q+sigma)v|^2/2 + |(L+sigma)v|^2/2`
/// with central differences. The integrated residual omits `div B`, which
/// integrates to zero for compactly supported `v`.
pub fn identity_residual(v: &ScalarField, params: &CarlemanParams) -> Result<IdentityBreakdown> {
    preflight(v, params)?;
    let g = v.grid;
    let tau = params.tau;
    let a = params.a_choice();
    let c = params.geometry.radial_coeff();

    let mut lhs = ScalarField::zeros(g);
    let mut qp = ScalarField::zeros(g);
    let mut qm = ScalarField::zeros(g);
    let mut rr = ScalarField::zeros(g);
    let mut s1 = ScalarField::zeros(g);
    let mut s2 = ScalarField::zeros(g);
    let mut bt = ScalarField::zeros(g);
    let mut br = ScalarField::zeros(g);

    for i in 1..g.nt - 1 {
        let t = g.t(i);
        for j in 1..g.nx - 1 {
            let r = g.x(j);
            let w = params.weights(t, r);
            let val = v.at(i, j);
            let (vt, vr) = d1(v, i, j);
            let (vtt, vrr) = d2(v, i, j);
            let lap = -vtt + vrr + c / r * vr;
            let lv = 2.0 * tau * (t * vt + w.s * vr);
            let conj = lap - lv + w.q * val;
            let gv = vr * vr - vt * vt;
            let sq_a = lap + w.q * val + w.sigma * val;
            let sq_b = lv + w.sigma * val;

            lhs.set(i, j, 0.5 * conj * conj);
            qp.set(i, j, (a + 2.0 * tau) * gv);
            qm.set(i, j, 2.0 * w.phi * tau * tau * (2.0 * tau - a) * val * val);
            rr.set(i, j, (-a * a - 0.5 * w.lap_sigma) * val * val);
            s1.set(i, j, 0.5 * sq_a * sq_a);
            s2.set(i, j, 0.5 * sq_b * sq_b);

            // B with grad v = (-v_t, v_r) and grad ell = tau (t, r - r1).
            let scalar = gv - (w.q + w.sigma) * val * val;
            bt.set(i, j, sq_b * vt + scalar * tau * t);
            br.set(i, j, -sq_b * vr + scalar * tau * w.s + 0.5 * val * val * w.sigma_r);
        }
    }

    let mut div_b = ScalarField::zeros(g);
    let mut pointwise = 0.0f64;
    for i in 2..g.nt - 2 {
        for j in 2..g.nx - 2 {
            let r = g.x(j);
            let div = d1(&bt, i, j).0 + d1(&br, i, j).1 + c / r * br.at(i, j);
            div_b.set(i, j, div);
            let rhs = qp.at(i, j) + qm.at(i, j) + div + rr.at(i, j) + s1.at(i, j) + s2.at(i, j);
            pointwise = pointwise.max((lhs.at(i, j) - rhs).abs());
        }
    }

    let cfg = &params.geometry;
    let int_lhs = integrate(&lhs, None, cfg);
    let int_rhs = [&qp, &qm, &rr, &s1, &s2].iter().map(|f| integrate(f, None, cfg)).sum::<f64>();
    let integrated = (int_lhs - int_rhs).abs();
    let relative = if int_lhs == 0.0 { 0.0 } else { integrated / int_lhs.abs() };

    Ok(IdentityBreakdown {
        lhs,
        q_plus_term: qp,
        q_minus_term: qm,
        div_b_term: div_b,
        r_term: rr,
        square1: s1,
        square2: s2,
        residual_pointwise: pointwise,
        residual_integrated: integrated,
        relative_integrated: relative,
    })
}

/// `Q+(X, X) = (a + 2 tau)(-|X^t|^2 + |X^r|^2)` for radial fields.
pub fn q_plus(x: &VectorField, params: &CarlemanParams) -> Result<ScalarField> {
    params.validate()?;
    let k = params.a_choice() + 2.0 * params.tau;
    x.t.zip_with(&x.x, |xt, xr| k * (xr * xr - xt * xt))
}

/// Pointwise positivity witness for `Q+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityWitness {
    /// `min (Q+(grad v) + tau |v_t|^2) / (tau |grad v|^2)`, full gradient.
    pub min_ratio_full: f64,
    /// `min (Q+(grad v) + (a + 2 tau)|v_t|^2) / (tau |grad_x v|^2)`, the form
    /// in which the time component is fully compensated.
    pub min_ratio_compensated: f64,
    pub points: usize,
}

/// Scans the interior of `v`'s gradient for the worst ratio in the two
/// positivity forms. Points where the relevant gradient is below `1e-10` of
/// its maximum are skipped.
pub fn q_plus_positivity(v: &ScalarField, params: &CarlemanParams) -> Result<PositivityWitness> {
    preflight(v, params)?;
    let g = v.grid;
    let tau = params.tau;
    let k = params.a_choice() + 2.0 * tau;
    let r0 = params.geometry.r0_inner();
    let mut grads = Vec::new();
    let (mut max_full, mut max_x) = (0.0f64, 0.0f64);
    for i in 1..g.nt - 1 {
        for j in 1..g.nx - 1 {
            let (vt, vr) = d1(v, i, j);
            if (vt != 0.0 || vr != 0.0) && g.x(j) < r0 {
                return Err(LabError::SupportViolation(format!("gradient nonzero at r = {} < r0", g.x(j))));
            }
            max_full = max_full.max(vt * vt + vr * vr);
            max_x = max_x.max(vr * vr);
            grads.push((vt, vr));
        }
    }
    let mut w = PositivityWitness { min_ratio_full: f64::INFINITY, min_ratio_compensated: f64::INFINITY, points: 0 };
    for (vt, vr) in grads {
        let qp = k * (vr * vr - vt * vt);
        let full = vt * vt + vr * vr;
        if full > 1e-10 * max_full {
            w.min_ratio_full = w.min_ratio_full.min((qp + tau * vt * vt) / (tau * full));
            w.points += 1;
        }
        if vr * vr > 1e-10 * max_x {
            w.min_ratio_compensated = w.min_ratio_compensated.min((qp + k * vt * vt) / (tau * vr * vr));
        }
    }
    Ok(w)
}

/// `Q-(grad ell)` sampled on a grid twice: once as `phi tau^3` and once
/// assembled as `-a G(grad ell) + 2 D^2 ell(grad ell, grad ell)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QMinusFields {
    pub closed: ScalarField,
    pub assembled: ScalarField,
    /// Largest pointwise `|closed - assembled| / max(|closed|, |assembled|)`.
    pub max_relative_gap: f64,
}

pub fn q_minus_on_grad_ell(grid: GridSpec, params: &CarlemanParams) -> Result<QMinusFields> {
    params.validate()?;
    grid.validate()?;
    let tau = params.tau;
    let a = params.a_choice();
    let cfg = params.geometry;
    let closed = ScalarField::from_fn(grid, |t, x| foliation_phi(t, cfg.radius(x), &cfg) * tau * tau * tau);
    let assembled = ScalarField::from_fn(grid, |t, x| {
        let s = cfg.radius(x) - cfg.r1();
        let (gt, gr) = (tau * t, tau * s);
        let g_ell = gr * gr - gt * gt;
        // The t-r block of D^2 phi is the metric itself.
        let hess = tau * g_ell;
        -a * g_ell + 2.0 * hess
    });
    let mut gap = 0.0f64;
    for (c, s) in closed.values.iter().zip(&assembled.values) {
        let den = c.abs().max(s.abs());
        if den > 0.0 {
            gap = gap.max((c - s).abs() / den);
        }
    }
    Ok(QMinusFields { closed, assembled, max_relative_gap: gap })
}

/// Largest `|-(d_t phi)^2 + (d_r phi)^2 - 2 phi|` over the grid, with the
/// gradient in closed form.
pub fn eikonal_defect(grid: &GridSpec, cfg: &GeometryConfig) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..grid.nt {
        let t = grid.t(i);
        for j in 0..grid.nx {
            let r = cfg.radius(grid.x(j));
            let (pt, pr) = (-t, r - cfg.r1());
            let phi = foliation_phi(t, r, cfg);
            worst = worst.max((pr * pr - pt * pt - 2.0 * phi).abs());
        }
    }
    worst
}

fn conjugated_core(v: &ScalarField, params: &CarlemanParams, eps: f64) -> ScalarField {
    let g = v.grid;
    let tau = params.tau;
    let c = params.geometry.radial_coeff();
    let mut out = ScalarField::zeros(g);
    for i in 1..g.nt - 1 {
        let t = g.t(i);
        for j in 1..g.nx - 1 {
            let r = g.x(j);
            let w = params.weights(t, r);
            let val = v.at(i, j);
            let (vt, vr) = d1(v, i, j);
            let (vtt, vrr) = d2(v, i, j);
            let lap = -vtt + vrr + c / r * vr;
            let lv = 2.0 * tau * (t * vt + w.s * vr);
            let base = lap - lv + w.q * val;
            let a1 = eps * vtt;
            let a2 = -2.0 * eps * tau * t * vt;
            let a3 = -eps * eps * vtt;
            let a4 = -eps * tau * val;
            out.set(i, j, base - 2.0 * a1 + a2 + a3 + a4);
        }
    }
    out
}

/// `box_{ell,eps} v = (Delta - L + q) v - 2 A1 v + A2 v + A3 v + A4 v` with
/// `A1 = eps d_t^2`, `A2 = -2 eps tau t d_t`, `A3 = -eps^2 d_t^2`,
/// `A4 = -eps tau`. The boundary ring is zero.
pub fn conjugated_wave_apply(v: &ScalarField, params: &CarlemanParams) -> Result<ScalarField> {
    preflight(v, params)?;
    Ok(conjugated_core(v, params, params.epsilon))
}

/// `e^ell Delta_g (e^-ell v)` by differencing the unconjugated product, with
/// `Delta_g = -box` taken from [`crate::grid::apply_box`]. An independent
/// assembly of the `eps = 0` operator.
pub fn conjugated_direct(v: &ScalarField, params: &CarlemanParams) -> Result<ScalarField> {
    preflight(v, params)?;
    let g = v.grid;
    let cfg = params.geometry;
    // Any constant offset in ell cancels; centre it to keep exponents small.
    let ell = ScalarField::from_fn(g, |t, x| params.ell(t, x));
    let mid = 0.5 * (ell.values.iter().cloned().fold(f64::INFINITY, f64::min)
        + ell.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let down = v.zip_with(&ell, |val, l| val * (mid - l).exp())?;
    let boxed = crate::grid::apply_box(&down, None, &cfg)?;
    let mut out = boxed.zip_with(&ell, |b, l| -b * (l - mid).exp())?;
    for i in 0..g.nt {
        for j in 0..g.nx {
            if i == 0 || j == 0 || i == g.nt - 1 || j == g.nx - 1 {
                out.set(i, j, 0.0);
            }
        }
    }
    Ok(out)
}

/// `||W box_ell v - box_{ell,eps} W v|| / ||v||_{H1}` with
/// `W = exp(-eps D_t^2 / (2 tau))`, both norms discrete over the interior.
pub fn intertwining_defect(v: &ScalarField, params: &CarlemanParams) -> Result<f64> {
    preflight(v, params)?;
    if v.is_zero() {
        return Ok(0.0);
    }
    let w = Multiplier::new(MultiplierSpec::GaussianWeight { epsilon: params.epsilon, tau: params.tau })?;
    let left = w.apply(&conjugated_core(v, params, 0.0))?;
    let wv = w.apply(v)?;
    check_interior_support(&wv, 2)?;
    let right = conjugated_core(&wv, params, params.epsilon);
    let g = v.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 2..g.nt - 2 {
        for j in 2..g.nx - 2 {
            let d = left.at(i, j) - right.at(i, j);
            num += d * d;
            let (vt, vr) = d1(v, i, j);
            den += v.at(i, j).powi(2) + vt * vt + vr * vr;
        }
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests;
