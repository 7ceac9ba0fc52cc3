//! Turning a one-parameter family of bounds `a <= e^(C1 mu) b + c / mu^alpha`
//! (valid for `mu >= mu0`) into a single logarithmic bound on `a`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::least_squares;

const X_FLOOR: f64 = 1e-8;
const SCAN_POINTS: usize = 2001;
const GOLDEN_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `K = sup_x g(x) / (2 C1)`.
    pub k: f64,
    pub x_star: f64,
    /// `D1 = (2 C1)^alpha max(K, mu0)`.
    pub d1: f64,
    /// `D1 c / log(c/b + 1)^alpha`.
    pub bound: f64,
}

fn objective(x: f64) -> f64 {
    ((1.0 + x) * x).sqrt() * (1.0 / x + 1.0).ln()
}

/// Maximizes the objective on `[lo, hi]`: log-spaced scan, then golden
/// section on the cell pair around the best sample.
fn maximize(lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (hi, objective(hi));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let xs: Vec<f64> =
        (0..SCAN_POINTS).map(|i| (llo + (lhi - llo) * i as f64 / (SCAN_POINTS - 1) as f64).exp()).collect();
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if objective(x) > objective(xs[best]) {
            best = i;
        }
    }
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(SCAN_POINTS - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a) > GOLDEN_RTOL * b {
        if objective(c) > objective(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let mid = 0.5 * (a + b);
    // The endpoints stay candidates: the maximum often sits at `hi`.
    [xs[best], mid, hi].into_iter().map(|x| (x, objective(x))).fold((lo, f64::NEG_INFINITY), |acc, p| {
        if p.1 > acc.1 {
            p
        } else {
            acc
        }
    })
}

/// Logarithmic bound on `a` given `a <= e^(C1 mu) b + c mu^-alpha` for all
/// `mu >= mu0`, `a <= c` and `b <= C2 c`.
pub fn optimize_bound(b: f64, c: f64, c1: f64, c2: f64, alpha: f64, mu0: f64) -> Result<BoundReport> {
    let finite_pos = |v: f64| v.is_finite() && v > 0.0;
    if !(finite_pos(b) && finite_pos(c) && finite_pos(c1) && finite_pos(c2) && finite_pos(alpha)) {
        return Err(LabError::InvalidParameter(format!(
            "b, c, C1, C2, alpha must be positive (b = {b}, c = {c}, C1 = {c1}, C2 = {c2}, alpha = {alpha})"
        )));
    }
    if !(mu0 >= 1.0 && mu0.is_finite()) {
        return Err(LabError::InvalidParameter(format!("mu0 must be >= 1, got {mu0}")));
    }
    if b > c2 * c {
        return Err(LabError::PreconditionViolated(format!("b = {b} exceeds C2 c = {}", c2 * c)));
    }
    let (x_star, sup) = maximize(X_FLOOR.min(c2), c2);
    let k = sup / (2.0 * c1);
    let d1 = (2.0 * c1).powf(alpha) * k.max(mu0);
    let bound = d1 * c / (c / b + 1.0).ln().powf(alpha);
    Ok(BoundReport { k, x_star, d1, bound })
}

/// Smallest right-hand side on a dense log-spaced `mu` grid starting at
/// `mu0`, capped at `c`. The grid runs well past the point where the
/// exponential term alone exceeds `c`.
pub fn brute_force_minimum(b: f64, c: f64, c1: f64, alpha: f64, mu0: f64, samples: usize) -> f64 {
    let crossover = ((c / b).max(1.0)).ln() / c1;
    let hi = 4.0 * mu0.max(crossover) + 1.0;
    let (llo, lhi) = (mu0.ln(), hi.ln());
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let mu = (llo + (lhi - llo) * i as f64 / (samples - 1) as f64).exp();
            (c1 * mu).exp() * b + c / mu.powf(alpha)
        })
        .fold(c, f64::min)
}

/// Slope of `log(bound / c)` against `log log c` over a sweep of `c` with
/// everything else fixed. Tends to `-alpha`.
pub fn log_slope(b: f64, cs: &[f64], c1: f64, c2: f64, alpha: f64, mu0: f64) -> Result<f64> {
    let mut xs = Vec::with_capacity(cs.len());
    let mut ys = Vec::with_capacity(cs.len());
    for &c in cs {
        if c <= 1.0 {
            return Err(LabError::InvalidParameter(format!("the sweep needs c > 1, got {c}")));
        }
        let r = optimize_bound(b, c, c1, c2, alpha, mu0)?;
        xs.push(c.ln().ln());
        ys.push((r.bound / c).ln());
    }
    Ok(least_squares(&xs, &ys)?.0)
}
