//! Empirical probes: vanishing on the shrunken diamond for data that cannot
//! reach it, and the local low-frequency estimate across one level band.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::carleman::WitnessReport;
use crate::error::{LabError, Result};
use crate::geometry::{foliation_phi, region_mask, smooth_cutoff, CutoffSpec, GeometryConfig, Level, Region};
use crate::grid::{apply_box, norm, norm_sq_masked, NormKind, ScalarField};
use crate::ledger::{DepConstants, LedgerCoefficients, Point};
use crate::multipliers::{Multiplier, MultiplierSpec};
use crate::wave::{manufacture_solutions, EnsembleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcProbeReport {
    pub recipe: String,
    pub delta: f64,
    pub labels: Vec<String>,
    /// `|u|_{L2(D_delta)} / |u|_{H1(grid)}` per member.
    pub values: Vec<f64>,
    pub max: f64,
}

/// Solves the ensemble and measures how much of each solution shows up on
/// the shrunken diamond, relative to its size on the whole grid.
pub fn qualitative_uc_probe(spec: &EnsembleSpec, delta: f64, level: Level) -> Result<UcProbeReport> {
    let cfg = spec.geometry;
    let sols = manufacture_solutions(spec)?;
    let mut labels = Vec::with_capacity(sols.len());
    let mut values = Vec::with_capacity(sols.len());
    for s in &sols {
        let inner = region_mask(&s.u.grid, &Region::DiamondDelta { delta, level }, &cfg)?;
        let num = norm_sq_masked(&s.u, &inner, NormKind::L2, &cfg)?.sqrt();
        let den = norm(&s.u, &Region::Everywhere, NormKind::H1, &cfg)?;
        labels.push(s.label.clone());
        values.push(if num == 0.0 { 0.0 } else { num / den });
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(UcProbeReport { recipe: spec.recipe.name().into(), delta, labels, values, max })
}

/// Parameters of the local probe. The level band sits around `gamma` with
/// half-width set by `zeta = a delta^2 / 16`; the regularization scale is
/// `lambda = lambda_ratio * mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalQuantOptions {
    pub gamma: f64,
    pub delta: f64,
    pub a_frak: f64,
    pub lambda_ratio: f64,
    pub coefficients: LedgerCoefficients,
    pub geometry: GeometryConfig,
}

impl Default for LocalQuantOptions {
    fn default() -> Self {
        LocalQuantOptions {
            gamma: 0.125,
            delta: 0.3,
            a_frak: 16.0,
            lambda_ratio: 1.0,
            coefficients: LedgerCoefficients::default(),
            geometry: GeometryConfig::default(),
        }
    }
}

impl LocalQuantOptions {
    pub fn zeta(&self) -> f64 {
        self.a_frak * self.delta * self.delta / 16.0
    }
}

const SUPPORT_TOL: f64 = 1e-12;

/// `log(e^a + e^b)` without overflow; `b` must be finite.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Evaluates both sides of the local estimate over `mu_sweep`:
/// left `|M^{beta mu}_mu sigma_mu u|_{H1}`, right (without the coefficient)
/// `e^{kappa mu}(|M^{alpha mu}_mu theta_mu u|_{H1} + |box u|_{L2(Omega_delta)})
/// + e^{-kappa' mu}|u|_{H1}`, with `kappa'` and `beta` from the ledger's
/// single-step bundle. The witnessed constant is the smallest coefficient
/// `C / delta^N` that makes every sweep point hold.
///
/// The report reuses [`WitnessReport`]: `tau_values` holds the `mu` sweep and
/// `tau_floor` the ledger's `mu0 = C / (delta^8 beta)`.
pub fn local_quantitative_probe(
    u: &ScalarField,
    kappa: f64,
    alpha: f64,
    n: f64,
    mu_sweep: &[f64],
    opts: &LocalQuantOptions,
) -> Result<WitnessReport> {
    if mu_sweep.is_empty() {
        return Err(LabError::InsufficientSweep { got: 0, need: 1 });
    }
    let p = Point::new(kappa, alpha, opts.delta);
    if !p.in_domain() {
        return Err(LabError::InvalidParameter(format!("need kappa, alpha in (0, 1] and delta in (0, 1), got {p:?}")));
    }
    if mu_sweep.iter().any(|&m| !(m > 0.0 && m.is_finite())) || !(opts.lambda_ratio > 0.0) {
        return Err(LabError::InvalidParameter("mu sweep and lambda ratio must be positive".into()));
    }
    let cfg = opts.geometry;
    let consts = DepConstants::single_step(n, &opts.coefficients)?.eval(p);
    let (gamma, zeta) = (opts.gamma, opts.zeta());
    let mu0 = consts.mu0;

    let empty = |lhs: Vec<f64>, rhs: Vec<f64>, per: Vec<f64>| WitnessReport {
        gamma,
        epsilon: 0.0,
        tau_values: mu_sweep.to_vec(),
        lhs,
        rhs,
        per_tau_constant: per,
        witnessed_constant: 0.0,
        refinement_ratios: Vec::new(),
        a_per_tau: Vec::new(),
        a_hat: None,
        tau_floor: mu0,
        tau_floor_met: mu_sweep.iter().all(|&m| m >= mu0),
        pass: true,
    };
    let m = mu_sweep.len();
    if u.is_zero() {
        return Ok(empty(alloc::vec![0.0; m], alloc::vec![0.0; m], alloc::vec![0.0; m]));
    }

    let g = u.grid;
    let peak = u.max_abs();
    for j in 0..g.nx {
        if cfg.radius(g.x(j)) < cfg.r0_inner() && (0..g.nt).any(|i| u.at(i, j).abs() > SUPPORT_TOL * peak) {
            return Err(LabError::SupportViolation(format!("u is nonzero at r = {} < r~0", cfg.radius(g.x(j)))));
        }
    }

    let sigma = smooth_cutoff(CutoffSpec::new(
        (gamma - zeta / 4.0, gamma + zeta / 4.0),
        (gamma - zeta / 8.0, gamma + zeta / 8.0),
    ))?;
    let theta = smooth_cutoff(CutoffSpec::new((gamma + zeta / 16.0, f64::INFINITY), (gamma + zeta / 10.0, f64::INFINITY)))?;
    let phi = ScalarField::from_fn(g, |t, x| foliation_phi(t, cfg.radius(x), &cfg));
    let sigma_f = phi.map(|v| sigma.eval(v));
    let theta_f = phi.map(|v| theta.eval(v));

    let total = norm(u, &Region::Everywhere, NormKind::H1, &cfg)?;
    let source = match norm(&apply_box(u, None, &cfg)?, &Region::OmegaDelta { delta: opts.delta }, NormKind::L2, &cfg) {
        Ok(v) => v,
        Err(LabError::EmptyRegion) => 0.0,
        Err(e) => return Err(e),
    };

    let mut lhs = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut per = Vec::with_capacity(m);
    for &mu in mu_sweep {
        let lambda = opts.lambda_ratio * mu;
        // Smoothed cutoffs extend to the time edges; only their product with
        // the compactly supported u is filtered under the guard.
        let reg = Multiplier::new(MultiplierSpec::Regularizer { lambda })?;
        let sigma_mu = reg.apply_unguarded(&sigma_f);
        let theta_mu = reg.apply_unguarded(&theta_f);
        let low_beta = Multiplier::new(MultiplierSpec::LowPassReg { mu: consts.beta * mu, lambda })?;
        let low_alpha = Multiplier::new(MultiplierSpec::LowPassReg { mu: alpha * mu, lambda })?;
        let left = norm(&low_beta.apply(&sigma_mu.mul(u)?)?, &Region::Everywhere, NormKind::H1, &cfg)?;
        let obs = norm(&low_alpha.apply(&theta_mu.mul(u)?)?, &Region::Everywhere, NormKind::H1, &cfg)?;
        // Logs keep e^{kappa mu} finite in the ratio.
        let log_r = log_add(kappa * mu + (obs + source).ln(), -consts.kappa_prime * mu + total.ln());
        lhs.push(left);
        rhs.push(log_r.exp());
        per.push(if left == 0.0 { 0.0 } else { (left.ln() - log_r).exp() });
    }
    let witnessed = per.iter().copied().fold(0.0, f64::max);
    let mut report = empty(lhs, rhs, per);
    report.witnessed_constant = witnessed;
    report.pass = witnessed.is_finite();
    Ok(report)
}
