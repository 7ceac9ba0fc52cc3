//! End-to-end checks through the public API only.

use carleman_core::ledger::algebra::Point;
use carleman_core::ledger::{closed_form, iterate, ledger_table, LedgerCoefficients, Relation};
use carleman_core::stability::{strip_measure, strip_measure_exact};
use carleman_core::wave::{solve, time_grid, Boundary, CauchyProblem};
use carleman_core::{GeometryConfig, GridSpec, Level};

#[test]
fn iterated_relation_matches_the_closed_form() {
    let k = LedgerCoefficients::default();
    for delta in [0.3, 0.1, 0.05] {
        let base = Relation::single_step(1.0, delta, 1.0, &k).unwrap();
        let p = Point::new(1.0, 0.5, delta);
        for steps in 0..6 {
            let got = iterate(&base, steps).unwrap().constants.eval(p);
            let want = closed_form(1.0, steps, &k, p);
            for (a, b) in [(got.c, want.c), (got.beta, want.beta), (got.mu0, want.mu0)] {
                assert!((a / b - 1.0).abs() <= 1e-12, "delta {delta} k {steps}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn ledger_rows_grow_as_delta_shrinks() {
    let rows = ledger_table(&[0.2, 0.1, 0.05], 1.0, &LedgerCoefficients::default()).unwrap();
    assert!(rows.windows(2).all(|w| w[1].log_closed > w[0].log_closed && w[1].k_delta > w[0].k_delta));
}

#[test]
fn periodic_solver_tracks_travelling_waves() {
    // u = sin(x - t) + cos(3(x + t)) on the circle.
    let grid = time_grid((0.0, 1.0), (0.0, 2.0 * std::f64::consts::PI), 400, 0.9).unwrap();
    let exact = |t: f64, x: f64| (x - t).sin() + (3.0 * (x + t)).cos();
    let u0 = (0..grid.nx).map(|j| exact(0.0, grid.x(j))).collect();
    let u1 = (0..grid.nx).map(|j| -(grid.x(j)).cos() - 3.0 * (3.0 * grid.x(j)).sin()).collect();
    let problem = CauchyProblem { boundary: Boundary::Periodic, cfl: 0.9, ..CauchyProblem::new(grid, u0, u1) };
    let u = solve(&problem).unwrap();
    let last = grid.nt - 1;
    let err = (0..grid.nx).map(|j| (u.at(last, j) - exact(grid.t(last), grid.x(j))).abs()).fold(0.0, f64::max);
    assert!(err < 1e-2, "sup error {err}");
}

#[test]
fn strip_mask_quadrature_approaches_the_exact_section() {
    let cfg = GeometryConfig::default();
    let grid = GridSpec::new(-0.5, 0.5, -1.5, 1.5, 801, 2401).unwrap();
    let delta = 0.1;
    let grid_measure = strip_measure(&grid, delta, Level::Sq, &cfg).unwrap();
    let exact = strip_measure_exact(delta, Level::Sq, &cfg).unwrap();
    assert!((grid_measure / exact - 1.0).abs() < 0.05, "{grid_measure} vs {exact}");
}
