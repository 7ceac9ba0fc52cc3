//! Time-frequency multipliers and the wave solver.

use std::f64::consts::PI;

use carleman_core::multipliers::{bound_probe, conjugation_residual, LemmaId, Multiplier, MultiplierSpec, ProbeInstance};
use carleman_core::wave::{energy_drift, finite_speed_leakage, solve, time_grid, Boundary, CauchyProblem};
use carleman_core::{GeometryConfig, GridSpec, LabError, ScalarField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::{fmt, Item, Outcome};
use crate::config::{MultiplierParams, WaveParams};
use crate::io::Table;

pub const TONE_TOL: f64 = 1e-10;
pub const CONJ_MIN_RATIO: f64 = 3.0;
pub const SUP_ERROR_TOL: f64 = 5e-3;
pub const MAX_DX: f64 = 1e-2;
pub const LEAKAGE_TOL: f64 = 1e-6;
pub const DRIFT_TOL: f64 = 1e-3;

/// Largest deviation of a sampled pure tone from `symbol * tone` after the
/// periodic Gaussian weight.
fn tone_error(p: &MultiplierParams) -> Result<f64, LabError> {
    let (n, dt) = (p.tone_len, p.tone_dt);
    let w = Multiplier::new(MultiplierSpec::GaussianWeight { epsilon: p.tone_epsilon, tau: p.tone_tau })?;
    let mut worst = 0.0f64;
    for &k in &p.tone_modes {
        if k >= n {
            return Err(LabError::InvalidParameter(format!("tone mode {k} needs more than {n} samples")));
        }
        let omega = 2.0 * PI * k as f64 / (n as f64 * dt);
        let orig: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, omega * j as f64 * dt)).collect();
        let mut data = orig.clone();
        w.apply_periodic(&mut data, dt);
        let factor = (-p.tone_epsilon * omega * omega / (2.0 * p.tone_tau)).exp();
        for (a, b) in data.iter().zip(&orig) {
            worst = worst.max((a - b * factor).norm());
        }
    }
    Ok(worst)
}

pub fn multipliers(p: &MultiplierParams, grid: GridSpec) -> Result<Outcome, LabError> {
    let tone = tone_error(p)?;
    let pulse = |g: GridSpec| ScalarField::from_fn(g, |t, x| (1.0 + x) * (-4.0 * (t - 0.2) * (t - 0.2)).exp());
    let coarse = conjugation_residual(&pulse(grid), p.conj_epsilon, p.conj_tau)?;
    let fine = conjugation_residual(&pulse(grid.refined()), p.conj_epsilon, p.conj_tau)?;
    let conj_ratio = coarse / fine;

    let probes = p
        .lemmas
        .par_iter()
        .map(|&id| bound_probe(id, &ProbeInstance::for_lemma(id)))
        .collect::<Result<Vec<_>, LabError>>()?;
    let mut table =
        Table::new("lemma_probe", &["lemma", "sweep", "lhs", "envelope", "fitted_rate", "expected_rate", "pass"]);
    for r in &probes {
        let name = format!("{:?}", r.lemma_id);
        for k in 0..r.sweep.len() {
            table.push(vec![
                name.clone().into(),
                r.sweep[k].into(),
                r.lhs_values[k].into(),
                r.envelope_values[k].into(),
                r.fitted_rate.into(),
                r.expected_rate.unwrap_or(f64::NAN).into(),
                r.pass.into(),
            ]);
        }
    }
    let a2 = probes.iter().find(|r| r.lemma_id == LemmaId::A2);
    let rate_summary = match a2 {
        Some(r) => format!(
            "A2 rate {} vs {}",
            fmt(r.fitted_rate),
            r.expected_rate.map(fmt).unwrap_or_else(|| "none".into())
        ),
        None => "A2 not probed".into(),
    };
    let pass = tone <= TONE_TOL && conj_ratio >= CONJ_MIN_RATIO && a2.is_some() && probes.iter().all(|r| r.pass);
    let summary = format!("tone error {}, conjugation ratio {}, {rate_summary}", fmt(tone), fmt(conj_ratio));
    Ok(Outcome {
        items: vec![Item::new(5, "multiplier exactness and almost-locality rate", pass, summary)],
        report: json!({
            "tone_error": tone,
            "conjugation_residual": [coarse, fine],
            "conjugation_ratio": conj_ratio,
            "probes": probes,
        }),
        tables: vec![table],
        fields: Vec::new(),
    })
}

fn bump(x: f64) -> f64 {
    if x.abs() < 0.5 {
        (1.0 - 1.0 / (1.0 - 4.0 * x * x)).exp()
    } else {
        0.0
    }
}

pub fn wave(p: &WaveParams, grid: GridSpec) -> Result<Outcome, LabError> {
    // sin(x - t) on a periodic grid over [0, 2 pi].
    let xs: Vec<f64> = (0..grid.nx).map(|j| grid.x(j)).collect();
    let travel = CauchyProblem {
        cfl: p.cfl,
        boundary: Boundary::Periodic,
        ..CauchyProblem::new(grid, xs.iter().map(|x| x.sin()).collect(), xs.iter().map(|x| -x.cos()).collect())
    };
    let exact = ScalarField::from_fn(grid, |t, x| (x - t).sin());
    let sup_error = solve(&travel)?.sub(&exact)?.max_abs();

    // A compact pulse on [-3, 3]: the support radius 0.6 covers both bumps.
    let g = time_grid((0.0, p.t_end), (-3.0, 3.0), p.bump_nx, 0.5)?;
    let u0 = (0..g.nx).map(|j| bump(g.x(j))).collect();
    let u1 = (0..g.nx).map(|j| 0.5 * bump(g.x(j) - 0.1)).collect();
    let pulse = CauchyProblem { cfl: 0.5, ..CauchyProblem::new(g, u0, u1) };
    let u = solve(&pulse)?;
    let leakage = finite_speed_leakage(&u, 0.6, &GeometryConfig::default())?;
    let drift = energy_drift(&u, &pulse)?;

    let checks = [
        ("traveling_wave_sup_error", sup_error, SUP_ERROR_TOL),
        ("grid_dx", grid.dx(), MAX_DX),
        ("finite_speed_leakage", leakage, LEAKAGE_TOL),
        ("energy_drift", drift, DRIFT_TOL),
    ];
    let mut table = Table::new("wave", &["check", "value", "threshold", "pass"]);
    for (name, v, tol) in checks {
        table.push(vec![name.into(), v.into(), tol.into(), (v <= tol).into()]);
    }
    let pass = checks.iter().all(|(_, v, tol)| v <= tol);
    let summary = format!(
        "sup error {} at dx {}, leakage {}, energy drift {}",
        fmt(sup_error),
        fmt(grid.dx()),
        fmt(leakage),
        fmt(drift)
    );
    Ok(Outcome {
        items: vec![Item::new(6, "wave solver accuracy, finite speed and energy", pass, summary)],
        report: json!({
            "traveling_grid": grid,
            "pulse_grid": g,
            "sup_error": sup_error,
            "leakage": leakage,
            "energy_drift": drift,
        }),
        tables: vec![table],
        fields: Vec::new(),
    })
}
