//! Bookkeeping for dependence relations between superlevel sets of the
//! foliation and the constants they carry.
//!
//! A relation `{phi > gamma - step} <| {phi > gamma}` comes with a bundle
//! `(C, kappa', beta, mu0)` whose entries are functions of the free
//! parameters `(kappa, alpha)` and of the level spacing `delta`. The bundle
//! is kept symbolic (see [`algebra`]) so that composing and iterating
//! relations keeps every power of `delta` exact. All large magnitudes are
//! returned as natural logs.

pub mod algebra;
mod optimize;

#[cfg(test)]
mod tests;

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use algebra::{MaxForm, MinForm, Monomial, Point};
pub use optimize::{brute_force_minimum, log_slope, optimize_bound, BoundReport};

use crate::error::{LabError, Result};

/// The anonymous absolute constants behind the `~` relations. All default to
/// 1 except the `kappa'` coefficient: with 2 the iterated bundle lands
/// exactly on the textbook closed forms (see [`closed_form`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LedgerCoefficients {
    /// Prefactor `C` in `C / delta^N`.
    pub c: f64,
    pub kappa_prime: f64,
    pub beta: f64,
    /// Numerator of `mu0 = C / (delta^8 beta)`.
    pub mu0: f64,
    /// Step constant `a` in `zeta = a delta^2 / 16`.
    pub a_frak: f64,
    /// Starting level of the propagation, `r~^2 / 8` for `r~ = 1`.
    pub gamma: f64,
}

impl Default for LedgerCoefficients {
    fn default() -> Self {
        LedgerCoefficients { c: 1.0, kappa_prime: 2.0, beta: 1.0, mu0: 1.0, a_frak: 1.0, gamma: 0.125 }
    }
}

impl LedgerCoefficients {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("c", self.c),
            ("kappa_prime", self.kappa_prime),
            ("beta", self.beta),
            ("mu0", self.mu0),
            ("a_frak", self.a_frak),
            ("gamma", self.gamma),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(LabError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.c < 1.0 {
            return Err(LabError::InvalidParameter(format!("c must be >= 1, got {}", self.c)));
        }
        Ok(())
    }

    /// `b` in `step = b delta^2`: from `b delta^2 = zeta / 12`.
    pub fn step_coeff(&self) -> f64 {
        self.a_frak / 192.0
    }
}

/// Constant bundle of one dependence relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepConstants {
    /// `c * delta^(-p)`, no `kappa`/`alpha` dependence.
    pub c_form: Monomial,
    pub kappa_prime_form: MinForm,
    pub beta_form: MinForm,
    pub mu0_form: MaxForm,
    /// Structural exponent of the single step.
    pub n: f64,
}

impl DepConstants {
    /// The single-step bundle: `C / delta^N`, `kappa', beta ~
    /// min(delta^N, kappa delta^N, alpha delta^N)`, `mu0 = C / (delta^8 beta)`.
    pub fn single_step(n: f64, k: &LedgerCoefficients) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(LabError::InvalidParameter(format!("N must be positive, got {n}")));
        }
        k.validate()?;
        let shape = |c: f64| {
            MinForm::new(alloc::vec![
                Monomial::new(c, 0.0, 0.0, n),
                Monomial::new(c, 1.0, 0.0, n),
                Monomial::new(c, 0.0, 1.0, n),
            ])
        };
        let beta_form = shape(k.beta);
        let out = DepConstants {
            c_form: Monomial::delta_only(k.c, -n),
            kappa_prime_form: shape(k.kappa_prime),
            mu0_form: MaxForm::reciprocal(Monomial::delta_only(k.mu0, -8.0), &beta_form),
            beta_form,
            n,
        };
        out.validate()?;
        Ok(out)
    }

    /// `C = 1, kappa' = kappa, beta = alpha, mu0 = 1`.
    pub fn identity() -> Self {
        DepConstants {
            c_form: Monomial::ONE,
            kappa_prime_form: MinForm::kappa(),
            beta_form: MinForm::alpha(),
            mu0_form: MaxForm::new(alloc::vec![Monomial::ONE]),
            n: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.c_form;
        let all = self
            .kappa_prime_form
            .terms
            .iter()
            .chain(&self.beta_form.terms)
            .chain(&self.mu0_form.terms)
            .chain(core::iter::once(c));
        for t in all {
            if !(t.coeff.is_finite() && t.coeff > 0.0) {
                return Err(LabError::InvalidParameter(format!("non-positive coefficient {}", t.coeff)));
            }
        }
        if c.kappa_pow != 0.0 || c.alpha_pow != 0.0 || c.delta_pow > 0.0 || c.coeff < 1.0 {
            return Err(LabError::InvalidParameter("C must have the form c delta^(-p) with c >= 1, p >= 0".into()));
        }
        if !self.kappa_prime_form.monotone() || !self.beta_form.monotone() {
            return Err(LabError::InvalidParameter("kappa' and beta need non-negative kappa/alpha powers".into()));
        }
        if !self.mu0_form.antitone() {
            return Err(LabError::InvalidParameter("mu0 needs non-positive kappa/alpha powers".into()));
        }
        Ok(())
    }

    pub fn eval(&self, p: Point) -> ConstantValues {
        ConstantValues {
            c: self.c_form.eval(p),
            kappa_prime: self.kappa_prime_form.eval(p),
            beta: self.beta_form.eval(p),
            mu0: self.mu0_form.eval(p),
        }
    }
}

/// Numeric values of a bundle at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantValues {
    pub c: f64,
    pub kappa_prime: f64,
    pub beta: f64,
    pub mu0: f64,
}

/// `{phi > target_level} <| {phi > source_level}` with its constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub source_level: f64,
    pub target_level: f64,
    pub constants: DepConstants,
}

fn levels_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl Relation {
    pub fn new(source_level: f64, target_level: f64, constants: DepConstants) -> Result<Self> {
        if !(target_level < source_level) {
            return Err(LabError::InvalidParameter(format!(
                "target level {target_level} must lie below source level {source_level}"
            )));
        }
        constants.validate()?;
        Ok(Relation { source_level, target_level, constants })
    }

    /// One propagation step from `gamma` down by `b delta^2`.
    pub fn single_step(gamma: f64, delta: f64, n: f64, k: &LedgerCoefficients) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LabError::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        let step = k.step_coeff() * delta * delta;
        Relation::new(gamma, gamma - step, DepConstants::single_step(n, k)?)
    }

    pub fn step(&self) -> f64 {
        self.source_level - self.target_level
    }

    /// Same constants, levels translated so the relation starts at `source`.
    pub fn shifted(&self, source: f64) -> Relation {
        Relation { source_level: source, target_level: source - self.step(), constants: self.constants.clone() }
    }
}

/// Chains `U <| W` (`rel1`) with `V <| U` (`rel2`) into `V <| W`.
///
/// With `(kappa, alpha)` the parameters requested of the result, `rel1` is
/// invoked at `(kappa/2, alpha)` and `rel2` at `(kt, beta1)` where
/// `kt = min(kappa1', kappa) / 2`. Then `C3 = C1 C2`,
/// `kappa3' = min(kappa2', kappa1'/2)`, `beta3 = beta2` and
/// `mu03 = max(mu01, mu02)`.
pub fn compose(rel1: &Relation, rel2: &Relation) -> Result<Relation> {
    if !levels_match(rel2.source_level, rel1.target_level) {
        return Err(LabError::LevelMismatch { expected: rel1.target_level, found: rel2.source_level });
    }
    let (a, b) = (&rel1.constants, &rel2.constants);
    let half_kappa = MinForm::kappa().scale(0.5);
    let alpha = MinForm::alpha();

    let kp1 = a.kappa_prime_form.substitute(&half_kappa, &alpha);
    let beta1 = a.beta_form.substitute(&half_kappa, &alpha);
    let mu01 = a.mu0_form.substitute(&half_kappa, &alpha);
    let kt = kp1.min(&MinForm::kappa()).scale(0.5);

    let kp2 = b.kappa_prime_form.substitute(&kt, &beta1);
    let beta2 = b.beta_form.substitute(&kt, &beta1);
    let mu02 = b.mu0_form.substitute(&kt, &beta1);

    let constants = DepConstants {
        c_form: a.c_form.mul(&b.c_form),
        kappa_prime_form: kp2.min(&kp1.scale(0.5)),
        beta_form: beta2,
        mu0_form: mu01.max(&mu02),
        n: a.n.max(b.n),
    };
    Ok(Relation { source_level: rel1.source_level, target_level: rel2.target_level, constants })
}

/// `k` further applications of `base` below itself, i.e. `k + 1` copies
/// chained from the top. `k = 0` returns `base`.
pub fn iterate(base: &Relation, k: usize) -> Result<Relation> {
    let mut acc = base.clone();
    for _ in 0..k {
        let next = base.shifted(acc.target_level);
        acc = compose(&acc, &next)?;
    }
    Ok(acc)
}

/// Independent evaluation of the iterated bundle after `k` steps:
/// `C_k = C^(k+1) / delta^(N(k+1))`,
/// `beta_k = min(kappa 2^-k delta^(N(k+1)), alpha delta^(N(k+1)))`,
/// `mu0_k = C / (delta^8 beta_k)`, and `kappa'_k` reported with the same
/// shape as `beta_k` (the relation only fixes it up to a constant).
///
/// Matches [`iterate`] exactly under the default coefficients while
/// `delta^N <= 1/2`; above that the `kappa1'/2` branch of the composition
/// can bind.
pub fn closed_form(n: f64, k: usize, k_coeffs: &LedgerCoefficients, p: Point) -> ConstantValues {
    let e = n * (k as f64 + 1.0);
    let dn = p.delta.powf(e);
    let beta = (p.kappa / 2f64.powi(k as i32) * dn).min(p.alpha * dn);
    ConstantValues {
        c: k_coeffs.c.powi(k as i32 + 1) / dn,
        kappa_prime: beta,
        beta,
        mu0: k_coeffs.mu0 / (p.delta.powi(8) * beta),
    }
}

/// Smallest `k >= 0` with `gamma - (k + 1) b delta^2 <= delta`.
pub fn steps_needed(gamma: f64, delta: f64, b: f64) -> Result<u64> {
    if !(delta > 0.0 && b > 0.0 && gamma >= delta && gamma.is_finite()) {
        return Err(LabError::PreconditionViolated(format!(
            "steps_needed needs gamma >= delta > 0 and b > 0 (gamma = {gamma}, delta = {delta}, b = {b})"
        )));
    }
    let step = b * delta * delta;
    let x = (gamma - delta) / step;
    if !x.is_finite() || x > 1e15 {
        return Err(LabError::NumericalOverflow(format!("step count {x:e} does not fit")));
    }
    // The ceiling is taken on the rounded quotient and then corrected
    // against the defining inequality, so exact multiples land correctly.
    let mut k = (x.ceil() as u64).saturating_sub(1);
    let reaches = |k: u64| gamma - (k as f64 + 1.0) * step <= delta * (1.0 + 1e-12);
    while k > 0 && reaches(k - 1) {
        k -= 1;
    }
    while !reaches(k) {
        k += 1;
    }
    Ok(k)
}

/// `log B(delta) = (N / delta^4) log(1/delta)`.
pub fn log_blowup(delta: f64, n: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || !(n > 0.0) {
        return Err(LabError::InvalidParameter(format!("need 0 < delta < 1 and N > 0 (delta = {delta}, N = {n})")));
    }
    Ok(n / delta.powi(4) * (1.0 / delta).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub delta: f64,
    pub n: f64,
    pub log_closed: f64,
    /// Level spacing actually iterated, `delta^2 / 3`.
    pub delta_iter: f64,
    pub k_delta: u64,
    /// `log C_k` at `delta_iter` with `k = k_delta`.
    pub log_end_to_end: f64,
    /// `log_end_to_end / (log(1/delta) / delta^4)`: the `N` the closed form
    /// would need to reproduce the reconstruction at this `delta`.
    pub effective_n: f64,
    pub coefficients: LedgerCoefficients,
}

/// Closed form plus an end-to-end reconstruction: iterate single steps at
/// spacing `delta^2 / 3` from `gamma` down to that level and read off the
/// accumulated `C_k`.
pub fn blowup_constant(delta: f64, n: f64, k: &LedgerCoefficients) -> Result<BlowupReport> {
    k.validate()?;
    let log_closed = log_blowup(delta, n)?;
    let delta_iter = delta * delta / 3.0;
    if k.gamma < delta_iter {
        return Err(LabError::PreconditionViolated(format!(
            "starting level {} lies below the target {delta_iter}",
            k.gamma
        )));
    }
    let k_delta = steps_needed(k.gamma, delta_iter, k.step_coeff())?;
    let log_end_to_end = (k_delta as f64 + 1.0) * (k.c.ln() + n * (1.0 / delta_iter).ln());
    let unit = (1.0 / delta).ln() / delta.powi(4);
    Ok(BlowupReport {
        delta,
        n,
        log_closed,
        delta_iter,
        k_delta,
        log_end_to_end,
        effective_n: log_end_to_end / unit,
        coefficients: *k,
    })
}

/// How well one renamed exponent reconciles the reconstruction with the
/// closed form over a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenamingReport {
    pub deltas: Vec<f64>,
    pub reference_delta: f64,
    /// Effective exponent at the reference level.
    pub n_star: f64,
    /// `log_end_to_end / (n_star * closed form at N = 1)` per delta.
    pub ratios: Vec<f64>,
    pub bracket: (f64, f64),
    pub pass: bool,
}

/// Fixes `N*` at the median `delta` and checks that the reconstruction stays
/// within `bracket` of `N*` times the unit closed form everywhere else.
pub fn renaming_check(deltas: &[f64], n: f64, k: &LedgerCoefficients, bracket: (f64, f64)) -> Result<RenamingReport> {
    if deltas.is_empty() {
        return Err(LabError::InsufficientSweep { got: 0, need: 1 });
    }
    let reports: Vec<BlowupReport> = deltas.iter().map(|&d| blowup_constant(d, n, k)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
    let mid = order[order.len() / 2];
    let n_star = reports[mid].effective_n;
    let ratios: Vec<f64> = reports.iter().map(|r| r.effective_n / n_star).collect();
    let pass = ratios.iter().all(|&r| r >= bracket.0 && r <= bracket.1);
    Ok(RenamingReport { deltas: deltas.to_vec(), reference_delta: deltas[mid], n_star, ratios, bracket, pass })
}

/// One row of the ledger table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub delta: f64,
    pub k_delta: u64,
    pub log_closed: f64,
    pub log_end_to_end: f64,
    pub n: f64,
    pub coefficients: LedgerCoefficients,
}

pub fn ledger_table(deltas: &[f64], n: f64, k: &LedgerCoefficients) -> Result<Vec<LedgerRow>> {
    deltas
        .iter()
        .map(|&d| {
            let r = blowup_constant(d, n, k)?;
            Ok(LedgerRow {
                delta: d,
                k_delta: r.k_delta,
                log_closed: r.log_closed,
                log_end_to_end: r.log_end_to_end,
                n,
                coefficients: *k,
            })
        })
        .collect()
}
