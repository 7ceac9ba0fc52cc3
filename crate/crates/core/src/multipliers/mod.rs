//! Fourier multipliers acting on the time variable only.
//!
//! Symbols are evaluated at angular frequency `xi`; transforms run along the
//! time axis of each spatial column on a zero-padded buffer.

mod probe;

pub use probe::{bound_probe, LemmaId, ProbeInstance, ProbeReport};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fft;
use crate::geometry::{smooth_cutoff, Cutoff, CutoffSpec};
use crate::grid::{gradient, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MultiplierSpec {
    /// `exp(-eps xi^2 / (2 tau))`
    GaussianWeight { epsilon: f64, tau: f64 },
    /// `exp(-xi^2 / lambda)`
    Regularizer { lambda: f64 },
    /// `m(xi / mu)`
    LowPass { mu: f64 },
    /// `m_lambda(xi / mu)`: regularize first, then localize.
    LowPassReg { mu: f64, lambda: f64 },
}

impl MultiplierSpec {
    fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            MultiplierSpec::GaussianWeight { epsilon, tau } => vec![("epsilon", epsilon), ("tau", tau)],
            MultiplierSpec::Regularizer { lambda } => vec![("lambda", lambda)],
            MultiplierSpec::LowPass { mu } => vec![("mu", mu)],
            MultiplierSpec::LowPassReg { mu, lambda } => vec![("mu", mu), ("lambda", lambda)],
        }
    }
}

/// The fixed profile `m`: 1 on `|s| < 3/4`, supported in `|s| < 1`.
pub fn bump_profile() -> Cutoff {
    smooth_cutoff(CutoffSpec::new((-1.0, 1.0), (-0.75, 0.75))).expect("fixed profile is valid")
}

const BAND_PANELS: usize = 48;

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn gauss_legendre(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (node, w) in GL5 {
            total += w * f(mid + 0.5 * h * node);
        }
    }
    0.5 * h * total
}

/// The profile `m` smoothed by the heat kernel `(lambda/4pi)^(1/2) exp(-lambda s^2/4)`.
///
/// Plateau and exterior masses come from `erfc`, the two transition bands by
/// Gauss-Legendre quadrature, so both `m_lambda` and `1 - m_lambda` keep full
/// relative precision where they are small.
#[derive(Debug, Clone)]
pub struct SmoothedProfile {
    m: Cutoff,
    lambda: f64,
}

impl SmoothedProfile {
    pub fn new(lambda: f64) -> Self {
        Self { m: bump_profile(), lambda }
    }

    fn kernel(&self, s: f64) -> f64 {
        (self.lambda / (4.0 * PI)).sqrt() * (-self.lambda * s * s / 4.0).exp()
    }

    /// Mass of the kernel centred at `s` on `[a, b]`.
    fn mass(&self, s: f64, a: f64, b: f64) -> f64 {
        let k = self.lambda.sqrt() / 2.0;
        let (za, zb) = ((a - s) * k, (b - s) * k);
        if za >= 0.0 {
            0.5 * (libm::erfc(za) - libm::erfc(zb))
        } else if zb <= 0.0 {
            0.5 * (libm::erfc(-zb) - libm::erfc(-za))
        } else {
            1.0 - 0.5 * libm::erfc(-za) - 0.5 * libm::erfc(zb)
        }
    }

    fn bands(&self, s: f64, f: impl Fn(f64) -> f64) -> f64 {
        let g = |x: f64| f(x) * self.kernel(s - x);
        gauss_legendre(-1.0, -0.75, BAND_PANELS, g) + gauss_legendre(0.75, 1.0, BAND_PANELS, g)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.mass(s, -0.75, 0.75) + self.bands(s, |x| self.m.eval(x))
    }

    pub fn one_minus(&self, s: f64) -> f64 {
        let k = self.lambda.sqrt() / 2.0;
        let outer = 0.5 * libm::erfc((1.0 - s) * k) + 0.5 * libm::erfc((1.0 + s) * k);
        outer + self.bands(s, |x| 1.0 - self.m.eval(x))
    }
}

/// A validated multiplier with its profile data prepared.
#[derive(Debug, Clone)]
pub struct Multiplier {
    spec: MultiplierSpec,
    profile: Option<Cutoff>,
    smoothed: Option<SmoothedProfile>,
}

/// Fraction of the time extent at each end that must stay (numerically) empty.
const EDGE_FRACTION: f64 = 0.1;
const EDGE_TOL: f64 = 1e-12;

impl Multiplier {
    pub fn new(spec: MultiplierSpec) -> Result<Self> {
        for (name, v) in spec.params() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LabError::InvalidParameter(format!("{name} = {v} must be positive and finite")));
            }
        }
        let (profile, smoothed) = match spec {
            MultiplierSpec::LowPass { .. } => (Some(bump_profile()), None),
            MultiplierSpec::LowPassReg { lambda, .. } => (None, Some(SmoothedProfile::new(lambda))),
            _ => (None, None),
        };
        Ok(Self { spec, profile, smoothed })
    }

    pub fn spec(&self) -> MultiplierSpec {
        self.spec
    }

    pub fn symbol(&self, xi: f64) -> f64 {
        match self.spec {
            MultiplierSpec::GaussianWeight { epsilon, tau } => (-epsilon * xi * xi / (2.0 * tau)).exp(),
            MultiplierSpec::Regularizer { lambda } => (-xi * xi / lambda).exp(),
            MultiplierSpec::LowPass { mu } => self.profile.as_ref().map_or(0.0, |m| m.eval(xi / mu)),
            MultiplierSpec::LowPassReg { mu, .. } => self.smoothed.as_ref().map_or(0.0, |m| m.eval(xi / mu)),
        }
    }

    /// Applies the symbol to a periodic complex sequence of power-of-two
    /// length, with no padding and no support guard.
    pub fn apply_periodic(&self, data: &mut [Complex64], dt: f64) {
        apply_symbol_periodic(data, dt, |xi| self.symbol(xi));
    }

    /// Applies the multiplier to a real time series sampled with spacing `dt`.
    pub fn apply_series(&self, data: &[f64], dt: f64) -> Result<Vec<f64>> {
        check_support(data)?;
        Ok(self.apply_series_unguarded(data, dt))
    }

    /// As [`Multiplier::apply_series`] without the wrap-around guard, for
    /// intermediate results whose tails are known to be negligible.
    pub fn apply_series_unguarded(&self, data: &[f64], dt: f64) -> Vec<f64> {
        apply_symbol_series(data, dt, |xi| self.symbol(xi))
    }

    /// Applies the multiplier along time for every spatial column.
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField> {
        check_field_support(u)?;
        Ok(self.apply_unguarded(u))
    }

    pub fn apply_unguarded(&self, u: &ScalarField) -> ScalarField {
        apply_symbol_field(u, |xi| self.symbol(xi))
    }
}

/// One-shot helper: builds the multiplier and applies it to `u`.
pub fn apply(spec: MultiplierSpec, u: &ScalarField) -> Result<ScalarField> {
    Multiplier::new(spec)?.apply(u)
}

fn edge_rows(n: usize) -> usize {
    ((n - 1) as f64 * EDGE_FRACTION).ceil() as usize
}

fn check_support(data: &[f64]) -> Result<()> {
    let max = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(());
    }
    let n = data.len();
    let e = edge_rows(n);
    let hot = data[..e].iter().chain(&data[n - e..]).any(|v| v.abs() > EDGE_TOL * max);
    if hot {
        Err(LabError::SupportTooWide)
    } else {
        Ok(())
    }
}

fn check_field_support(u: &ScalarField) -> Result<()> {
    let max = u.max_abs();
    if max == 0.0 {
        return Ok(());
    }
    let g = u.grid;
    let e = edge_rows(g.nt);
    for i in (0..e).chain(g.nt - e..g.nt) {
        if u.row(i).iter().any(|v| v.abs() > EDGE_TOL * max) {
            return Err(LabError::SupportTooWide);
        }
    }
    Ok(())
}

/// Power-of-two length with at least twofold zero padding.
pub fn padded_len(n: usize) -> usize {
    (2 * n).next_power_of_two()
}

pub fn apply_symbol_periodic(data: &mut [Complex64], dt: f64, symbol: impl Fn(f64) -> f64) {
    let n = data.len();
    fft::forward(data);
    for (k, v) in data.iter_mut().enumerate() {
        *v *= symbol(fft::angular_frequency(k, n, dt));
    }
    fft::inverse(data);
}

fn symbol_table(n: usize, dt: f64, symbol: impl Fn(f64) -> f64) -> Vec<f64> {
    // Symbols here are even in xi, so each |xi| is evaluated once.
    let mut table = vec![0.0; n];
    for k in 0..=n / 2 {
        let s = symbol(fft::angular_frequency(k, n, dt).abs());
        table[k] = s;
        if k > 0 && k < n - k {
            table[n - k] = s;
        }
    }
    table
}

pub fn apply_symbol_series(data: &[f64], dt: f64, symbol: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = padded_len(data.len());
    let table = symbol_table(n, dt, symbol);
    filter_with_table(data, &table)
}

fn filter_with_table(data: &[f64], table: &[f64]) -> Vec<f64> {
    let n = table.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(data) {
        b.re = v;
    }
    fft::forward(&mut buf);
    for (b, &s) in buf.iter_mut().zip(table) {
        *b *= s;
    }
    fft::inverse(&mut buf);
    buf[..data.len()].iter().map(|c| c.re).collect()
}

/// Applies an even real symbol along time for every column of `u`.
pub fn apply_symbol_field(u: &ScalarField, symbol: impl Fn(f64) -> f64) -> ScalarField {
    let g = u.grid;
    let table = symbol_table(padded_len(g.nt), g.dt(), symbol);
    let mut out = ScalarField::zeros(g);
    for j in 0..g.nx {
        let col = u.column(j);
        if col.iter().all(|&v| v == 0.0) {
            continue;
        }
        out.set_column(j, &filter_with_table(&col, &table));
    }
    out
}

/// Discrete `sum |u|^2 dt` of a series and of its padded transform; the two
/// agree by Parseval.
pub fn parseval_pair(data: &[f64], dt: f64) -> (f64, f64) {
    let direct = data.iter().map(|v| v * v).sum::<f64>() * dt;
    let n = padded_len(data.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (b, &v) in buf.iter_mut().zip(data) {
        b.re = v;
    }
    fft::forward(&mut buf);
    let spectral = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() * dt / n as f64;
    (direct, spectral)
}

/// Relative defect in the identity `W(t u) = (t + eps d_t / tau) W u` with
/// `W = exp(-eps D_t^2 / (2 tau))`, measured in the discrete `L2` norm.
pub fn conjugation_residual(u: &ScalarField, epsilon: f64, tau: f64) -> Result<f64> {
    let w = Multiplier::new(MultiplierSpec::GaussianWeight { epsilon, tau })?;
    let base = u.values.iter().map(|v| v * v).sum::<f64>();
    if base == 0.0 {
        return Ok(0.0);
    }
    let tu = ScalarField::from_fn(u.grid, |t, _| t).mul(u)?;
    let lhs = w.apply(&tu)?;
    let wu = w.apply(u)?;
    let dwu = gradient(&wu)?.t;
    let g = u.grid;
    let mut err = 0.0;
    for i in 0..g.nt {
        let t = g.t(i);
        for j in 0..g.nx {
            let rhs = t * wu.at(i, j) + epsilon / tau * dwu.at(i, j);
            let d = lhs.at(i, j) - rhs;
            err += d * d;
        }
    }
    Ok((err / base).sqrt())
}
