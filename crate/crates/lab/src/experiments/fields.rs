//! Experiments on sampled test fields: the pointwise identity, the exact
//! algebra and positivity of the quadratic forms, and the subelliptic probe.

use carleman_core::carleman::{
    battery, compare_refinement, eikonal_defect, identity_residual, q_minus_on_grad_ell, q_plus_positivity,
    subelliptic_check, CarlemanParams,
};
use carleman_core::{GeometryConfig, GridSpec, LabError, SpaceMode};
use rayon::prelude::*;
use serde_json::json;

use super::{fmt, span, Item, Outcome};
use crate::config::{CarlemanExpParams, IdentityParams, ResolvedConfig, SubellipticParams};
use crate::io::Table;

pub const RATIO_BRACKET: (f64, f64) = (3.0, 5.0);
pub const MAX_RELATIVE_RESIDUAL: f64 = 1e-2;
pub const EXACT_TOL: f64 = 1e-12;
pub const POSITIVITY_FLOOR: f64 = 7.0 / 26.0 - 0.01;
pub const DRIFT_TOL: f64 = 0.2;

pub fn identity(cfg: &ResolvedConfig, p: &IdentityParams, grid: GridSpec) -> Result<Outcome, LabError> {
    let params = CarlemanParams::new(p.tau, p.epsilon, p.gamma, cfg.geometry)?;
    let fine = grid.refined();
    let bumps = battery(p.seed, p.count, p.window);
    let rows: Vec<(f64, f64, f64)> = bumps
        .par_iter()
        .map(|b| {
            let c = identity_residual(&b.sample(grid), &params)?;
            let f = identity_residual(&b.sample(fine), &params)?;
            Ok((c.residual_integrated, f.residual_integrated, f.relative_integrated))
        })
        .collect::<Result<_, LabError>>()?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.0 / r.1).collect();
    let relative: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let pass = ratios.iter().all(|r| (RATIO_BRACKET.0..=RATIO_BRACKET.1).contains(r))
        && relative.iter().all(|&r| r <= MAX_RELATIVE_RESIDUAL);

    let mut table = Table::new("identity", &["member", "residual_coarse", "residual_fine", "ratio", "relative_fine"]);
    for (k, (r, ratio)) in rows.iter().zip(&ratios).enumerate() {
        table.push(vec![k.into(), r.0.into(), r.1.into(), (*ratio).into(), r.2.into()]);
    }
    let summary = format!(
        "{} bumps, {}x{} -> {}x{}: ratios {}, fine relative residual <= {}",
        p.count,
        grid.nt,
        grid.nx,
        fine.nt,
        fine.nx,
        span(&ratios),
        fmt(relative.iter().copied().fold(0.0, f64::max))
    );
    let fields = match (p.dump_fields, bumps.first()) {
        (true, Some(b)) => vec![("identity_member0".to_string(), b.sample(grid))],
        _ => Vec::new(),
    };
    Ok(Outcome {
        items: vec![Item::new(1, "Carleman identity converges at second order", pass, summary)],
        report: json!({
            "coarse_grid": grid,
            "fine_grid": fine,
            "bumps": bumps,
            "refinement_ratios": ratios,
            "relative_residual_fine": relative,
            "ratio_bracket": RATIO_BRACKET,
            "max_relative_residual": MAX_RELATIVE_RESIDUAL,
        }),
        tables: vec![table],
        fields,
    })
}

/// The geometry the positivity check runs in: the configured one when it
/// is already radial, otherwise the radial geometry of the same cylinder.
fn radial_geometry(cfg: &GeometryConfig, n: usize) -> Result<GeometryConfig, LabError> {
    match cfg.mode {
        SpaceMode::RadialNd => Ok(*cfg),
        SpaceMode::Cartesian1d => GeometryConfig::new(cfg.r0, cfg.r_tilde, n, SpaceMode::RadialNd),
    }
}

pub fn carleman(cfg: &ResolvedConfig, p: &CarlemanExpParams, grid: GridSpec) -> Result<Outcome, LabError> {
    let radial = radial_geometry(&cfg.geometry, p.radial_n)?;
    let mut geometries = vec![cfg.geometry];
    if radial != cfg.geometry {
        geometries.push(radial);
    }

    let mut algebra = Table::new("q_minus", &["mode", "n", "max_relative_gap", "eikonal_defect"]);
    let (mut worst_gap, mut worst_eik) = (0.0f64, 0.0f64);
    for g in &geometries {
        let params = CarlemanParams::new(p.tau, p.epsilon, p.gamma, *g)?;
        let gap = q_minus_on_grad_ell(grid, &params)?.max_relative_gap;
        let eik = eikonal_defect(&grid, g);
        worst_gap = worst_gap.max(gap);
        worst_eik = worst_eik.max(eik);
        let mode = serde_json::to_value(g.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        algebra.push(vec![mode.into(), g.n.into(), gap.into(), eik.into()]);
    }
    let exact_pass = worst_gap <= EXACT_TOL && worst_eik <= EXACT_TOL;

    let params = CarlemanParams::new(p.tau, p.epsilon, p.gamma, radial)?;
    let bumps = battery(p.seed, p.count, p.window);
    let witnesses = bumps
        .par_iter()
        .map(|b| q_plus_positivity(&b.sample(p.positivity_grid), &params))
        .collect::<Result<Vec<_>, LabError>>()?;
    let full: Vec<f64> = witnesses.iter().map(|w| w.min_ratio_full).collect();
    let comp: Vec<f64> = witnesses.iter().map(|w| w.min_ratio_compensated).collect();
    let min_full = full.iter().copied().fold(f64::INFINITY, f64::min);
    let min_comp = comp.iter().copied().fold(f64::INFINITY, f64::min);
    let mut positivity = Table::new("positivity", &["member", "min_ratio_full", "min_ratio_compensated", "points"]);
    for (k, w) in witnesses.iter().enumerate() {
        positivity.push(vec![k.into(), w.min_ratio_full.into(), w.min_ratio_compensated.into(), w.points.into()]);
    }

    let items = vec![
        Item::new(
            2,
            "Q- closed form and eikonal are exact",
            exact_pass,
            format!("max relative gap {}, eikonal defect {}", fmt(worst_gap), fmt(worst_eik)),
        ),
        Item::new(
            3,
            "Q+ + tau|v_t|^2 >= (7/26 - 0.01) tau|grad v|^2 pointwise",
            min_full >= POSITIVITY_FLOOR,
            format!(
                "{} radial fields: min ratio {} vs floor {}; time-compensated spatial form min {}",
                p.count,
                fmt(min_full),
                fmt(POSITIVITY_FLOOR),
                fmt(min_comp)
            ),
        ),
    ];
    Ok(Outcome {
        items,
        report: json!({
            "geometries": geometries,
            "max_relative_gap": worst_gap,
            "eikonal_defect": worst_eik,
            "positivity_geometry": radial,
            "positivity_floor": POSITIVITY_FLOOR,
            "min_ratio_full": min_full,
            "min_ratio_compensated": min_comp,
            "witnesses": witnesses,
        }),
        tables: vec![algebra, positivity],
        fields: Vec::new(),
    })
}

pub fn subelliptic(cfg: &ResolvedConfig, p: &SubellipticParams, grid: GridSpec) -> Result<Outcome, LabError> {
    let tau0 = p.tau_sweep[0];
    let params = CarlemanParams::new(tau0, p.epsilon, p.gamma, cfg.geometry)?;
    let fine = grid.refined();
    let bumps = battery(p.seed, p.count, p.window);
    let reports = bumps
        .par_iter()
        .map(|b| {
            let c = subelliptic_check(&b.sample(grid), &params, &p.tau_sweep)?;
            let f = subelliptic_check(&b.sample(fine), &params, &p.tau_sweep)?;
            Ok((c.witnessed_constant, f.witnessed_constant, compare_refinement(&c, &f, DRIFT_TOL).pass))
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let sup = |sel: fn(&(f64, f64, bool)) -> f64| reports.iter().map(sel).fold(0.0, f64::max);
    let (sup_c, sup_f) = (sup(|r| r.0), sup(|r| r.1));
    let drifts: Vec<f64> = reports.iter().map(|r| (r.1 / r.0 - 1.0).abs()).collect();
    let ensemble_drift = (sup_f / sup_c - 1.0).abs();
    let finite = reports.iter().all(|r| r.0.is_finite() && r.1.is_finite());
    let pass = finite && reports.iter().all(|r| r.2) && ensemble_drift <= DRIFT_TOL;

    let mut table = Table::new("subelliptic", &["member", "constant_coarse", "constant_fine", "drift", "pass"]);
    for (k, (r, d)) in reports.iter().zip(&drifts).enumerate() {
        table.push(vec![k.into(), r.0.into(), r.1.into(), (*d).into(), r.2.into()]);
    }
    let summary = format!(
        "{} bumps at gamma {}: ensemble constant {} -> {} (drift {}), worst member drift {}",
        p.count,
        p.gamma,
        fmt(sup_c),
        fmt(sup_f),
        fmt(ensemble_drift),
        fmt(drifts.iter().copied().fold(0.0, f64::max))
    );
    Ok(Outcome {
        items: vec![Item::new(4, "subelliptic constant is finite and refinement-stable", pass, summary)],
        report: json!({
            "coarse_grid": grid,
            "fine_grid": fine,
            "tau_sweep": p.tau_sweep,
            "ensemble_constant": [sup_c, sup_f],
            "ensemble_drift": ensemble_drift,
            "member_drift": drifts,
            "drift_tolerance": DRIFT_TOL,
        }),
        tables: vec![table],
        fields: Vec::new(),
    })
}
