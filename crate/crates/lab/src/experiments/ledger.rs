//! Constant bookkeeping: fold against closed forms, step counts, the blowup
//! table and the one-dimensional optimization bound.

use carleman_core::ledger::{
    brute_force_minimum, closed_form, iterate, ledger_table, log_slope, optimize_bound, steps_needed, Point, Relation,
};
use carleman_core::LabError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{fmt, span, Item, Outcome};
use crate::config::LedgerParams;
use crate::io::Table;

pub const FOLD_TOL: f64 = 1e-12;
pub const SLOPE_TOL: f64 = 0.1;

/// Evaluation points of the fold check: `delta <= 1/2`, where the closed
/// forms are exact for the default coefficients.
fn fold_points() -> Vec<Point> {
    let axis = [0.05, 0.3, 0.5, 1.0];
    let mut out = Vec::new();
    for &k in &axis {
        for &a in &axis {
            for &d in &[0.05, 0.1, 0.2, 0.4, 0.5] {
                out.push(Point::new(k, a, d));
            }
        }
    }
    out
}

struct FoldCheck {
    max_rel_c: f64,
    max_rel_beta: f64,
    max_rel_mu0: f64,
    kappa_prime_ratio: (f64, f64),
}

fn fold_check(p: &LedgerParams) -> Result<FoldCheck, LabError> {
    let k = &p.coefficients;
    let base = Relation::single_step(k.gamma, p.deltas[0], p.n, k)?;
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    let mut out = FoldCheck { max_rel_c: 0.0, max_rel_beta: 0.0, max_rel_mu0: 0.0, kappa_prime_ratio: (f64::INFINITY, 0.0) };
    for steps in 0..=p.k_max {
        let r = iterate(&base, steps)?;
        for pt in fold_points() {
            let got = r.constants.eval(pt);
            let want = closed_form(p.n, steps, k, pt);
            out.max_rel_c = out.max_rel_c.max(rel(got.c, want.c));
            out.max_rel_beta = out.max_rel_beta.max(rel(got.beta, want.beta));
            out.max_rel_mu0 = out.max_rel_mu0.max(rel(got.mu0, want.mu0));
            let q = got.kappa_prime / want.kappa_prime;
            out.kappa_prime_ratio = (out.kappa_prime_ratio.0.min(q), out.kappa_prime_ratio.1.max(q));
        }
    }
    Ok(out)
}

fn bound_check(p: &LedgerParams) -> Result<(usize, f64), LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.bound_seed);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..p.bound_tuples {
        let c = 10f64.powf(rng.gen_range(-2.0..6.0));
        let c2 = rng.gen_range(0.1..3.0);
        let b = c * c2 * 10f64.powf(rng.gen_range(-8.0..0.0));
        let c1 = rng.gen_range(0.05..3.0);
        let alpha = rng.gen_range(0.1..1.0);
        let mu0 = rng.gen_range(1.0..20.0);
        let bound = optimize_bound(b, c, c1, c2, alpha, mu0)?.bound;
        let brute = brute_force_minimum(b, c, c1, alpha, mu0, p.bound_samples);
        violations += usize::from(brute > bound);
        worst = worst.max(brute / bound);
    }
    Ok((violations, worst))
}

pub fn ledger(p: &LedgerParams) -> Result<Outcome, LabError> {
    let k = &p.coefficients;
    let fold = fold_check(p)?;
    let fold_ok = fold.max_rel_c.max(fold.max_rel_beta).max(fold.max_rel_mu0) <= FOLD_TOL
        && fold.kappa_prime_ratio.0 >= 1.0 - FOLD_TOL
        && fold.kappa_prime_ratio.1 <= 2.0 + FOLD_TOL;

    // Steps from `steps_gamma` down to `delta` at spacing `b delta^2`:
    // k delta^2 lies in [(gamma - delta)/b - delta^2, gamma/b], inside the
    // fixed bracket below whenever delta <= gamma / 2 and delta^2 <= gamma / (4 b).
    let b = k.step_coeff();
    let bracket = (p.steps_gamma / (4.0 * b), p.steps_gamma / b);
    let steps: Vec<u64> = p.deltas.iter().map(|&d| steps_needed(p.steps_gamma, d, b)).collect::<Result<_, _>>()?;
    let scaled: Vec<f64> = steps.iter().zip(&p.deltas).map(|(&s, d)| s as f64 * d * d).collect();
    let steps_ok = scaled.iter().all(|s| (bracket.0..=bracket.1).contains(s));

    let rows = ledger_table(&p.deltas, p.n, k)?;
    let mut table = Table::new(
        "ledger",
        &[
            "delta",
            "k_delta",
            "log_blowup_closed",
            "log_blowup_end_to_end",
            "n",
            "c",
            "kappa_prime",
            "beta",
            "mu0",
            "a_frak",
            "gamma",
        ],
    );
    let mut table_ok = true;
    for r in &rows {
        table_ok &= r.log_closed == p.n / r.delta.powi(4) * (1.0 / r.delta).ln();
        let c = r.coefficients;
        table.push(vec![
            r.delta.into(),
            r.k_delta.into(),
            r.log_closed.into(),
            r.log_end_to_end.into(),
            r.n.into(),
            c.c.into(),
            c.kappa_prime.into(),
            c.beta.into(),
            c.mu0.into(),
            c.a_frak.into(),
            c.gamma.into(),
        ]);
    }

    let (violations, worst) = bound_check(p)?;
    let slopes: Vec<f64> =
        p.slope_alphas.iter().map(|&a| log_slope(1.0, &p.slope_cs, 0.5, 1.0, a, 1.0)).collect::<Result<_, _>>()?;
    let slope_errors: Vec<f64> = slopes.iter().zip(&p.slope_alphas).map(|(s, a)| (s + a).abs() / a).collect();
    let slope_ok = slope_errors.iter().all(|&e| e <= SLOPE_TOL);

    let items = vec![
        Item::new(
            7,
            "ledger fold, step counts and blowup table are exact",
            fold_ok && steps_ok && table_ok,
            format!(
                "k <= {}: max rel error C {} beta {} mu0 {}, kappa' ratio in [{}, {}]; k delta^2 in {} within [{}, {}]; table {}",
                p.k_max,
                fmt(fold.max_rel_c),
                fmt(fold.max_rel_beta),
                fmt(fold.max_rel_mu0),
                fmt(fold.kappa_prime_ratio.0),
                fmt(fold.kappa_prime_ratio.1),
                span(&scaled),
                fmt(bracket.0),
                fmt(bracket.1),
                if table_ok { "row-exact" } else { "mismatch" }
            ),
        ),
        Item::new(
            8,
            "optimization bound dominates brute force and decays at rate alpha",
            violations == 0 && slope_ok,
            format!(
                "{violations} violations in {} tuples (worst brute/bound {}), slope errors {}",
                p.bound_tuples,
                fmt(worst),
                span(&slope_errors)
            ),
        ),
    ];
    Ok(Outcome {
        items,
        report: json!({
            "fold": {
                "max_rel_c": fold.max_rel_c,
                "max_rel_beta": fold.max_rel_beta,
                "max_rel_mu0": fold.max_rel_mu0,
                "kappa_prime_ratio": [fold.kappa_prime_ratio.0, fold.kappa_prime_ratio.1],
            },
            "steps": {"gamma": p.steps_gamma, "b": b, "k": steps, "k_delta_sq": scaled, "bracket": bracket},
            "rows": rows,
            "bound": {"violations": violations, "worst_ratio": worst},
            "slopes": {"alphas": p.slope_alphas, "slopes": slopes, "relative_errors": slope_errors},
        }),
        tables: vec![table],
        fields: Vec::new(),
    })
}
