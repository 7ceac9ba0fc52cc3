//! Monomials in `(kappa, alpha, delta)` and their min/max envelopes.
//!
//! Everything is evaluated on the box `kappa, alpha in (0, 1]`,
//! `delta in (0, 1)`. That box is what lets us drop dominated terms: a term
//! with a smaller coefficient and no smaller exponents is below the other one
//! everywhere on it.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Evaluation point for the parametric constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub kappa: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl Point {
    pub fn new(kappa: f64, alpha: f64, delta: f64) -> Self {
        Point { kappa, alpha, delta }
    }

    pub fn in_domain(&self) -> bool {
        self.kappa > 0.0 && self.kappa <= 1.0 && self.alpha > 0.0 && self.alpha <= 1.0 && self.delta > 0.0 && self.delta < 1.0
    }
}

/// `coeff * kappa^kappa_pow * alpha^alpha_pow * delta^delta_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub kappa_pow: f64,
    pub alpha_pow: f64,
    pub delta_pow: f64,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { coeff: 1.0, kappa_pow: 0.0, alpha_pow: 0.0, delta_pow: 0.0 };

    pub fn new(coeff: f64, kappa_pow: f64, alpha_pow: f64, delta_pow: f64) -> Self {
        Monomial { coeff, kappa_pow, alpha_pow, delta_pow }
    }

    pub fn delta_only(coeff: f64, delta_pow: f64) -> Self {
        Monomial::new(coeff, 0.0, 0.0, delta_pow)
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.coeff * pw(p.kappa, self.kappa_pow) * pw(p.alpha, self.alpha_pow) * pw(p.delta, self.delta_pow)
    }

    /// Natural log of the value; stays finite where `eval` would overflow.
    pub fn ln_eval(&self, p: Point) -> f64 {
        self.coeff.ln() + lnpw(p.kappa, self.kappa_pow) + lnpw(p.alpha, self.alpha_pow) + lnpw(p.delta, self.delta_pow)
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        Monomial::new(
            self.coeff * o.coeff,
            self.kappa_pow + o.kappa_pow,
            self.alpha_pow + o.alpha_pow,
            self.delta_pow + o.delta_pow,
        )
    }

    pub fn powf(&self, e: f64) -> Monomial {
        if e == 0.0 {
            return Monomial::ONE;
        }
        Monomial::new(self.coeff.powf(e), self.kappa_pow * e, self.alpha_pow * e, self.delta_pow * e)
    }

    pub fn scale(&self, s: f64) -> Monomial {
        Monomial { coeff: self.coeff * s, ..*self }
    }

    /// Replaces `kappa` and `alpha` by the given monomials.
    pub fn substitute(&self, kappa: &Monomial, alpha: &Monomial) -> Monomial {
        Monomial::delta_only(self.coeff, self.delta_pow)
            .mul(&kappa.powf(self.kappa_pow))
            .mul(&alpha.powf(self.alpha_pow))
    }

    /// True when `self <= other` on the whole evaluation box.
    fn below(&self, other: &Monomial) -> bool {
        self.coeff <= other.coeff
            && self.kappa_pow >= other.kappa_pow
            && self.alpha_pow >= other.alpha_pow
            && self.delta_pow >= other.delta_pow
    }
}

// `0^0 = 1` keeps absent variables neutral.
fn pw(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

fn lnpw(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * x.ln()
    }
}

fn prune(terms: Vec<Monomial>, keep_small: bool) -> Vec<Monomial> {
    let dominated = |a: &Monomial, b: &Monomial| if keep_small { a.below(b) } else { b.below(a) };
    let mut out: Vec<Monomial> = Vec::with_capacity(terms.len());
    for t in terms {
        if out.iter().any(|o| dominated(o, &t)) {
            continue;
        }
        out.retain(|o| !dominated(&t, o));
        out.push(t);
    }
    out
}

/// Cartesian substitution of `kappa -> min/max(kappa_terms)` and
/// `alpha -> min/max(alpha_terms)` into every term.
fn substitute_all(terms: &[Monomial], kappa: &[Monomial], alpha: &[Monomial]) -> Vec<Monomial> {
    let mut out = Vec::new();
    for t in terms {
        let ks: &[Monomial] = if t.kappa_pow == 0.0 { &[Monomial::ONE] } else { kappa };
        let as_: &[Monomial] = if t.alpha_pow == 0.0 { &[Monomial::ONE] } else { alpha };
        for k in ks {
            for a in as_ {
                out.push(t.substitute(k, a));
            }
        }
    }
    out
}

/// Minimum of finitely many monomials with non-negative `kappa`/`alpha`
/// powers. Non-decreasing in both, so substituting a `MinForm` for either
/// variable stays a `MinForm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinForm {
    pub terms: Vec<Monomial>,
}

impl MinForm {
    pub fn new(terms: Vec<Monomial>) -> Self {
        MinForm { terms: prune(terms, true) }
    }

    pub fn single(m: Monomial) -> Self {
        MinForm { terms: vec![m] }
    }

    pub fn kappa() -> Self {
        MinForm::single(Monomial::new(1.0, 1.0, 0.0, 0.0))
    }

    pub fn alpha() -> Self {
        MinForm::single(Monomial::new(1.0, 0.0, 1.0, 0.0))
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms.iter().map(|t| t.eval(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn min(&self, o: &MinForm) -> MinForm {
        MinForm::new(self.terms.iter().chain(&o.terms).copied().collect())
    }

    pub fn scale(&self, s: f64) -> MinForm {
        MinForm::new(self.terms.iter().map(|t| t.scale(s)).collect())
    }

    pub fn substitute(&self, kappa: &MinForm, alpha: &MinForm) -> MinForm {
        MinForm::new(substitute_all(&self.terms, &kappa.terms, &alpha.terms))
    }

    pub(crate) fn monotone(&self) -> bool {
        self.terms.iter().all(|t| t.kappa_pow >= 0.0 && t.alpha_pow >= 0.0)
    }
}

/// Maximum of monomials with non-positive `kappa`/`alpha` powers, the shape
/// of `1/MinForm`. Substituting a `MinForm` keeps it a `MaxForm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxForm {
    pub terms: Vec<Monomial>,
}

impl MaxForm {
    pub fn new(terms: Vec<Monomial>) -> Self {
        MaxForm { terms: prune(terms, false) }
    }

    /// `numerator / form`.
    pub fn reciprocal(numerator: Monomial, form: &MinForm) -> Self {
        MaxForm::new(form.terms.iter().map(|t| numerator.mul(&t.powf(-1.0))).collect())
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.terms.iter().map(|t| t.eval(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max(&self, o: &MaxForm) -> MaxForm {
        MaxForm::new(self.terms.iter().chain(&o.terms).copied().collect())
    }

    pub fn substitute(&self, kappa: &MinForm, alpha: &MinForm) -> MaxForm {
        MaxForm::new(substitute_all(&self.terms, &kappa.terms, &alpha.terms))
    }

    pub(crate) fn antitone(&self) -> bool {
        self.terms.iter().all(|t| t.kappa_pow <= 0.0 && t.alpha_pow <= 0.0)
    }
}
