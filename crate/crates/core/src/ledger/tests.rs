use super::*;
use alloc::vec::Vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base(n: f64, c: f64) -> Relation {
    let k = LedgerCoefficients { c, ..Default::default() };
    Relation::single_step(0.125, 0.2, n, &k).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a / b - 1.0).abs() <= tol
}

fn grid() -> Vec<Point> {
    let mut out = Vec::new();
    for &k in &[0.05, 0.3, 0.5, 1.0] {
        for &a in &[0.05, 0.3, 0.5, 1.0] {
            for &d in &[0.05, 0.1, 0.2, 0.4, 0.5] {
                out.push(Point::new(k, a, d));
            }
        }
    }
    out
}

#[test]
fn c_multiplies() {
    let k3 = LedgerCoefficients { c: 3.0, ..Default::default() };
    let k5 = LedgerCoefficients { c: 5.0, ..Default::default() };
    let r1 = Relation::single_step(1.0, 0.5, 1.0, &k3).unwrap();
    let r2 = Relation::single_step(r1.target_level, 0.5, 1.0, &k5).unwrap();
    let r = compose(&r1, &r2).unwrap();
    assert_eq!(r.constants.c_form.coeff, 15.0);
    assert_eq!(r.constants.c_form.delta_pow, -2.0);
    assert_eq!(r.source_level, 1.0);
    assert_eq!(r.target_level, r2.target_level);
}

#[test]
fn level_mismatch_is_rejected() {
    let r1 = base(1.0, 1.0);
    let r2 = r1.shifted(r1.target_level - 0.01);
    assert!(matches!(compose(&r1, &r2), Err(LabError::LevelMismatch { .. })));
}

#[test]
fn composing_with_identity_halves_kappa_prime() {
    let r1 = base(1.0, 2.0);
    let id = Relation::new(r1.target_level, r1.target_level - 0.01, DepConstants::identity()).unwrap();
    let r = compose(&r1, &id).unwrap();
    for p in grid() {
        let half = Point { kappa: p.kappa / 2.0, ..p };
        let orig = r1.constants.eval(half);
        let got = r.constants.eval(p);
        assert_eq!(got.c, orig.c);
        assert!(rel_close(got.beta, orig.beta, 1e-14));
        assert!(rel_close(got.mu0, orig.mu0, 1e-14));
        // kappa2' = kt = min(kappa1', kappa)/2, so the minimum is kappa1'/2
        // unless kappa/2 undercuts it.
        let want = (orig.kappa_prime / 2.0).min(p.kappa / 2.0);
        assert!(rel_close(got.kappa_prime, want, 1e-14));
    }
}

#[test]
fn one_step_matches_worked_example() {
    // beta_3 = min(kappa/2 delta^2N, alpha delta^2N)
    let b = base(1.5, 1.0);
    let r = iterate(&b, 1).unwrap();
    assert_eq!(r, compose(&b, &b.shifted(b.target_level)).unwrap());
    for p in grid() {
        let d = p.delta.powf(3.0);
        assert!(rel_close(r.constants.beta_form.eval(p), (p.kappa / 2.0 * d).min(p.alpha * d), 1e-14));
    }
}

#[test]
fn iterate_powers_are_exact() {
    let n = 1.7;
    let r = iterate(&base(n, 1.0), 3).unwrap();
    assert_eq!(r.constants.c_form.delta_pow, -4.0 * n);
    assert!(rel_close(r.step(), 4.0 * base(n, 1.0).step(), 1e-12));
}

#[test]
fn fold_matches_closed_forms() {
    for &n in &[1.0, 2.0] {
        let coeffs = LedgerCoefficients { c: 3.0, mu0: 3.0, ..Default::default() };
        let b = Relation::single_step(0.125, 0.2, n, &coeffs).unwrap();
        for k in 0..=10 {
            let r = iterate(&b, k).unwrap();
            for p in grid() {
                let got = r.constants.eval(p);
                let want = closed_form(n, k, &coeffs, p);
                assert!(rel_close(got.c, want.c, 1e-12), "C k={k} {p:?}");
                assert!(rel_close(got.beta, want.beta, 1e-12), "beta k={k} {p:?}");
                assert!(rel_close(got.mu0, want.mu0, 1e-12), "mu0 k={k} {p:?}");
                // The kappa' relation only holds up to the coefficient.
                let ratio = got.kappa_prime / want.kappa_prime;
                assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&ratio), "kappa' k={k} {p:?} {ratio}");
            }
        }
    }
    let p = Point::new(0.5, 1.0, 0.2);
    let coeffs = LedgerCoefficients::default();
    let b = Relation::single_step(0.125, 0.2, 1.0, &coeffs).unwrap();
    let got = iterate(&b, 4).unwrap().constants.eval(p);
    assert!(rel_close(got.beta, closed_form(1.0, 4, &coeffs, p).beta, 1e-12));
}

#[test]
fn closed_forms_drift_for_large_delta() {
    // Above delta^N = 1/2 the kappa1'/2 branch binds and beta_k drops
    // below its closed form.
    let b = base(1.0, 1.0);
    let p = Point::new(0.5, 0.5, 0.9);
    let got = iterate(&b, 2).unwrap().constants.eval(p).beta;
    assert!(got < 0.9 * closed_form(1.0, 2, &LedgerCoefficients::default(), p).beta);
}

#[test]
fn associative_when_kappa_at_most_twice_alpha() {
    let b = base(1.0, 2.0);
    let b2 = b.shifted(b.target_level);
    let b3 = b.shifted(b2.target_level);
    let left = compose(&compose(&b, &b2).unwrap(), &b3).unwrap();
    let right = compose(&b, &compose(&b2, &b3).unwrap()).unwrap();
    assert_eq!(left.target_level, right.target_level);
    let mut saw_gap = false;
    for p in grid() {
        let (l, r) = (left.constants.eval(p), right.constants.eval(p));
        if p.kappa <= 2.0 * p.alpha {
            assert!(rel_close(l.c, r.c, 1e-14));
            assert!(rel_close(l.kappa_prime, r.kappa_prime, 1e-13), "{p:?}");
            assert!(rel_close(l.beta, r.beta, 1e-13), "{p:?}");
            assert!(rel_close(l.mu0, r.mu0, 1e-13), "{p:?}");
        } else {
            saw_gap |= !rel_close(l.beta, r.beta, 1e-6);
        }
    }
    assert!(saw_gap);
}

#[test]
fn iterate_splits_into_compositions() {
    let b = base(1.0, 1.5);
    for (j, k) in [(1usize, 1usize), (2, 3), (0, 4)] {
        let whole = iterate(&b, j + k + 1).unwrap();
        let head = iterate(&b, j).unwrap();
        let tail = iterate(&b, k).unwrap().shifted(head.target_level);
        let split = compose(&head, &tail).unwrap();
        assert!(rel_close(whole.target_level, split.target_level, 1e-12));
        for p in grid().into_iter().filter(|p| p.kappa <= 2.0 * p.alpha) {
            let (w, s) = (whole.constants.eval(p), split.constants.eval(p));
            assert!(rel_close(w.c, s.c, 1e-13));
            assert!(rel_close(w.beta, s.beta, 1e-12), "j={j} k={k} {p:?}");
            assert!(rel_close(w.kappa_prime, s.kappa_prime, 1e-12));
            assert!(rel_close(w.mu0, s.mu0, 1e-12));
        }
    }
}

#[test]
fn constants_validate() {
    let mut c = base(1.0, 1.0).constants;
    c.c_form.delta_pow = 1.0;
    assert!(c.validate().is_err());
    assert!(DepConstants::single_step(0.0, &LedgerCoefficients::default()).is_err());
    let bad = LedgerCoefficients { beta: -1.0, ..Default::default() };
    assert!(bad.validate().is_err());
    assert!(Relation::new(1.0, 1.0, DepConstants::identity()).is_err());
}

#[test]
fn steps_needed_examples() {
    assert_eq!(steps_needed(0.3, 0.3, 1.0).unwrap(), 0);
    assert_eq!(steps_needed(1.0, 0.1, 1.0).unwrap(), 89);
    assert!(steps_needed(0.1, 0.2, 1.0).is_err());
    let b = LedgerCoefficients::default().step_coeff();
    assert_eq!(b, 1.0 / 192.0);
    let scaled: Vec<f64> =
        [0.2, 0.1, 0.05, 0.025].iter().map(|&d| steps_needed(1.0, d, b).unwrap() as f64 * d * d).collect();
    for s in &scaled {
        assert!((100.0..=192.0).contains(s), "{scaled:?}");
    }
}

#[test]
fn blowup_closed_form_values() {
    let v = log_blowup(0.5, 1.0).unwrap();
    assert!((v - 16.0 * 2f64.ln()).abs() < 1e-12);
    assert!(log_blowup(1.0 - 1e-9, 1.0).unwrap() < 1e-8);
    assert!(log_blowup(0.0, 1.0).is_err());
    let ds = [0.9, 0.7, 0.5, 0.3, 0.2, 0.1];
    for n in [0.5, 1.0, 3.0] {
        for w in ds.windows(2) {
            assert!(log_blowup(w[1], n).unwrap() > log_blowup(w[0], n).unwrap());
        }
        for &d in &ds {
            assert!(log_blowup(d, n + 1.0).unwrap() > log_blowup(d, n).unwrap());
        }
    }
}

#[test]
fn end_to_end_reconstruction_agrees_after_renaming() {
    let k = LedgerCoefficients::default();
    let rep = renaming_check(&[0.4, 0.3, 0.2], 1.0, &k, (0.5, 2.0)).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.reference_delta, 0.3);
    let b = blowup_constant(0.3, 1.0, &k).unwrap();
    assert_eq!(b.log_closed, log_blowup(0.3, 1.0).unwrap());
    assert!(b.log_end_to_end > b.log_closed);
    // The reconstruction is the fold's C_k, taken in logs.
    let rel = Relation::single_step(k.gamma, b.delta_iter, 1.0, &k).unwrap();
    let small = iterate(&rel, 5).unwrap();
    let p = Point::new(0.5, 0.5, b.delta_iter);
    assert!(rel_close(small.constants.c_form.ln_eval(p), 6.0 * (1.0 / b.delta_iter).ln(), 1e-12));
}

#[test]
fn ledger_table_rows() {
    let rows = ledger_table(&[0.5, 0.4, 0.3], 1.0, &LedgerCoefficients::default()).unwrap();
    for r in &rows {
        assert_eq!(r.log_closed, r.n / r.delta.powi(4) * (1.0 / r.delta).ln());
    }
    assert!(rows[0].k_delta < rows[2].k_delta);
}

#[test]
fn bound_hand_value() {
    // b = c with C2 = 1: the log term is log 2.
    let r = optimize_bound(2.0, 2.0, 0.5, 1.0, 0.5, 1.0).unwrap();
    assert!(rel_close(r.bound, r.d1 * 2.0 / 2f64.ln().sqrt(), 1e-14));
    // The objective increases on (0, 1], so the supremum sits at x = 1.
    assert!(rel_close(r.x_star, 1.0, 1e-9));
    assert!(rel_close(r.k, 2f64.sqrt() * 2f64.ln() / 1.0, 1e-12));
    assert!(matches!(optimize_bound(3.0, 1.0, 1.0, 1.0, 1.0, 1.0), Err(LabError::PreconditionViolated(_))));
    assert!(optimize_bound(1.0, 1.0, 1.0, 1.0, 1.0, 0.5).is_err());
}

#[test]
fn bound_dominates_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c = 10f64.powf(rng.gen_range(-2.0..6.0));
        let c2 = rng.gen_range(0.1..3.0);
        let b = c * c2 * 10f64.powf(rng.gen_range(-8.0..0.0));
        let c1 = rng.gen_range(0.05..3.0);
        let alpha = rng.gen_range(0.1..1.0);
        let mu0 = rng.gen_range(1.0..20.0);
        let r = optimize_bound(b, c, c1, c2, alpha, mu0).unwrap();
        let brute = brute_force_minimum(b, c, c1, alpha, mu0, 20_000);
        worst = worst.max(brute / r.bound);
        assert!(brute <= r.bound, "b={b} c={c} C1={c1} C2={c2} alpha={alpha} mu0={mu0}");
    }
    assert!(worst > 0.0);
}

#[test]
fn bound_decays_logarithmically() {
    let cs: Vec<f64> = (0..12).map(|i| 10f64.powi(6 + 4 * i)).collect();
    for alpha in [0.25, 0.5, 1.0] {
        let s = log_slope(1.0, &cs, 0.5, 1.0, alpha, 1.0).unwrap();
        assert!((s + alpha).abs() <= 0.1 * alpha, "alpha={alpha} slope={s}");
    }
}

proptest! {
    #[test]
    fn compose_grows_c_and_shrinks_kappa_prime(c1 in 1.0f64..5.0, c2 in 1.0f64..5.0, n in 0.5f64..3.0,
                                               kp in 0.5f64..4.0, k in 0.01f64..1.0, a in 0.01f64..1.0,
                                               d in 0.01f64..0.99) {
        let k1 = LedgerCoefficients { c: c1, kappa_prime: kp, ..Default::default() };
        let k2 = LedgerCoefficients { c: c2, ..Default::default() };
        let r1 = Relation::single_step(1.0, 0.3, n, &k1).unwrap();
        let r2 = Relation::single_step(r1.target_level, 0.3, n, &k2).unwrap();
        let r = compose(&r1, &r2).unwrap();
        let p = Point::new(k, a, d);
        let (v, v1, v2) = (r.constants.eval(p), r1.constants.eval(p), r2.constants.eval(p));
        prop_assert!(v.c >= v1.c && v.c >= v2.c);
        prop_assert!(v.kappa_prime <= v1.kappa_prime && v.kappa_prime <= v2.kappa_prime);
    }

    #[test]
    fn steps_needed_is_minimal(gamma in 0.2f64..2.0, delta in 0.01f64..0.2, b in 0.01f64..2.0) {
        let k = steps_needed(gamma, delta, b).unwrap();
        let reaches = |k: u64| gamma - (k as f64 + 1.0) * b * delta * delta <= delta * (1.0 + 1e-12);
        prop_assert!(reaches(k));
        prop_assert!(k == 0 || !reaches(k - 1));
    }
}

#[test]
fn identity_bundle_is_neutral_on_values() {
    let id = DepConstants::identity();
    let v = id.eval(Point::new(0.3, 0.7, 0.5));
    assert_eq!(v, ConstantValues { c: 1.0, kappa_prime: 0.3, beta: 0.7, mu0: 1.0 });
}
