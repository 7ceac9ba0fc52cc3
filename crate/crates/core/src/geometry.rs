//! Foliation function, regions of the light-cone diamond, quadrature masks and
//! smooth cutoff profiles.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{GridSpec, ScalarField};

/// How the spatial grid coordinate is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceMode {
    /// One space dimension, coordinate `x`, radius `|x|`.
    #[serde(rename = "cartesian-1d")]
    Cartesian1d,
    /// Radial functions in `n` dimensions, coordinate `r > 0`.
    #[serde(rename = "radial-nd")]
    RadialNd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub r0: f64,
    /// Radius of the observation cylinder (written `R` in some places).
    pub r_tilde: f64,
    pub n: usize,
    pub mode: SpaceMode,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { r0: 2.0, r_tilde: 1.0, n: 1, mode: SpaceMode::Cartesian1d }
    }
}

impl GeometryConfig {
    pub fn new(r0: f64, r_tilde: f64, n: usize, mode: SpaceMode) -> Result<Self> {
        let cfg = Self { r0, r_tilde, n, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn radial(r_tilde: f64, n: usize) -> Result<Self> {
        Self::new(2.0f64.max(r_tilde).max(1.0 / r_tilde), r_tilde, n, SpaceMode::RadialNd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 1.0) || !self.r0.is_finite() {
            return Err(LabError::InvalidParameter(format!("r0 = {} must exceed 1", self.r0)));
        }
        if !(self.r_tilde >= 1.0 / self.r0 && self.r_tilde <= self.r0) {
            return Err(LabError::InvalidParameter(format!(
                "r_tilde = {} outside [1/r0, r0] = [{}, {}]",
                self.r_tilde,
                1.0 / self.r0,
                self.r0
            )));
        }
        if self.n == 0 {
            return Err(LabError::InvalidParameter("dimension n must be >= 1".into()));
        }
        if self.mode == SpaceMode::Cartesian1d && self.n != 1 {
            return Err(LabError::InvalidParameter("cartesian-1d mode requires n = 1".into()));
        }
        Ok(())
    }

    /// Vertex radius of the foliation, `3 r_tilde / 2`.
    pub fn r1(&self) -> f64 {
        1.5 * self.r_tilde
    }

    /// Inner radius below which no test function is supported, `13 r_tilde / 14`.
    pub fn r0_inner(&self) -> f64 {
        13.0 * self.r_tilde / 14.0
    }

    /// Radius associated with the grid's spatial coordinate.
    #[inline]
    pub fn radius(&self, x: f64) -> f64 {
        match self.mode {
            SpaceMode::Cartesian1d => x.abs(),
            SpaceMode::RadialNd => x,
        }
    }

    /// Coefficient of `1/r` in the radial Laplacian.
    pub fn radial_coeff(&self) -> f64 {
        match self.mode {
            SpaceMode::Cartesian1d => 0.0,
            SpaceMode::RadialNd => (self.n as f64) - 1.0,
        }
    }
}

/// `phi(t, r) = (-t^2 + (r - r1)^2) / 2`.
#[inline]
pub fn foliation_phi(t: f64, r: f64, cfg: &GeometryConfig) -> f64 {
    let s = r - cfg.r1();
    0.5 * (s * s - t * t)
}

/// Gradient `(t, r - r1)`; note `-g_t^2 + g_r^2 = 2 phi`.
#[inline]
pub fn grad_phi(t: f64, r: f64, cfg: &GeometryConfig) -> (f64, f64) {
    (t, r - cfg.r1())
}

/// Minkowski quadratic form `-X_t^2 + X_r^2`.
#[inline]
pub fn minkowski(xt: f64, xr: f64) -> f64 {
    xr * xr - xt * xt
}

/// Which superlevel family parameterizes the shrunken diamond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Level {
    /// `{phi > delta^2}`
    #[default]
    #[serde(rename = "level-sq")]
    Sq,
    /// `{phi > delta}`
    #[serde(rename = "level-lin")]
    Lin,
}

impl Level {
    pub fn threshold(self, delta: f64) -> f64 {
        match self {
            Level::Sq => delta * delta,
            Level::Lin => delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Region {
    Diamond,
    Cylinder,
    PhiSuperlevel { gamma: f64 },
    DiamondDelta {
        delta: f64,
        #[serde(default)]
        level: Level,
    },
    OmegaDelta { delta: f64 },
    AnnulusShell { r_lo: f64, r_hi: f64 },
    /// The whole grid.
    Everywhere,
}

impl Region {
    pub fn diamond_delta(delta: f64) -> Self {
        Region::DiamondDelta { delta, level: Level::Sq }
    }

    pub fn contains(&self, t: f64, x: f64, cfg: &GeometryConfig) -> bool {
        let r = cfg.radius(x);
        let big_r = cfg.r_tilde;
        let in_diamond = || t.abs() < 1.5 * big_r - r && t.abs() < 0.5 * big_r;
        match *self {
            Region::Diamond => in_diamond(),
            Region::Cylinder => r < big_r && t.abs() < 0.5 * big_r,
            Region::PhiSuperlevel { gamma } => foliation_phi(t, r, cfg) > gamma,
            Region::DiamondDelta { delta, level } => {
                in_diamond() && foliation_phi(t, r, cfg) > level.threshold(delta)
            }
            Region::OmegaDelta { delta } => foliation_phi(t, r, cfg) > delta,
            Region::AnnulusShell { r_lo, r_hi } => r >= r_lo && r <= r_hi,
            Region::Everywhere => true,
        }
    }
}

// Sub-sample offsets inside a dual cell, in units of the spacing.
const SUB: [f64; 4] = [-0.375, -0.125, 0.125, 0.375];

/// Quadrature weights in `[0, 1]`: the fraction of each node's dual cell that
/// lies inside `region`, estimated from a 4x4 sub-sample pattern.
pub fn region_mask(grid: &GridSpec, region: &Region, cfg: &GeometryConfig) -> Result<ScalarField> {
    let (dt, dx) = (grid.dt(), grid.dx());
    let mut w = Vec::with_capacity(grid.len());
    let mut any = false;
    for i in 0..grid.nt {
        let t = grid.t(i);
        for j in 0..grid.nx {
            let x = grid.x(j);
            let mut hits = 0u32;
            for a in SUB {
                for b in SUB {
                    if region.contains(t + a * dt, x + b * dx, cfg) {
                        hits += 1;
                    }
                }
            }
            any |= hits > 0;
            w.push(f64::from(hits) / 16.0);
        }
    }
    if !any {
        return Err(LabError::EmptyRegion);
    }
    ScalarField::from_vec(*grid, w)
}

/// Measure of a region as the mask-weighted cell volume (radial volume
/// element included in radial mode).
pub fn region_measure(grid: &GridSpec, region: &Region, cfg: &GeometryConfig) -> Result<f64> {
    let mask = region_mask(grid, region, cfg)?;
    let mut total = 0.0;
    for j in 0..grid.nx {
        let vol = grid.cell_volume(j, cfg);
        for i in 0..grid.nt {
            total += mask.at(i, j) * vol;
        }
    }
    Ok(total)
}

/// Plateau and support of a cutoff profile. Infinite ends are allowed as long
/// as plateau and support agree there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
}

impl CutoffSpec {
    pub fn new(support: (f64, f64), plateau: (f64, f64)) -> Self {
        Self { support, plateau }
    }
}

/// Smooth cutoff: 1 on the plateau, 0 off the support, monotone in between.
/// Each transition is the normalized integral of `exp(-1/s) exp(-1/(1-s))`.
#[derive(Debug, Clone)]
pub struct Cutoff {
    spec: CutoffSpec,
    step: SmoothStep,
}

/// Validates the spec and builds the profile.
pub fn smooth_cutoff(spec: CutoffSpec) -> Result<Cutoff> {
    let (a, d) = spec.support;
    let (b, c) = spec.plateau;
    if a.is_nan() || b.is_nan() || c.is_nan() || d.is_nan() || b > c {
        return Err(LabError::InvalidParameter("malformed cutoff intervals".into()));
    }
    let left_ok = if a.is_infinite() { b.is_infinite() && b < 0.0 } else { b - a > 0.0 };
    let right_ok = if d.is_infinite() { c.is_infinite() && c > 0.0 } else { d - c > 0.0 };
    if !left_ok || !right_ok {
        return Err(LabError::DegenerateBand);
    }
    Ok(Cutoff { spec, step: SmoothStep::new() })
}

impl Cutoff {
    pub fn spec(&self) -> CutoffSpec {
        self.spec
    }

    pub fn eval(&self, s: f64) -> f64 {
        let (a, d) = self.spec.support;
        let (b, c) = self.spec.plateau;
        if s <= a || s >= d {
            0.0
        } else if s < b {
            self.step.value((s - a) / (b - a))
        } else if s <= c {
            1.0
        } else {
            self.step.value((d - s) / (d - c))
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let (a, d) = self.spec.support;
        let (b, c) = self.spec.plateau;
        if s <= a || s >= d || (s >= b && s <= c) {
            0.0
        } else if s < b {
            self.step.slope((s - a) / (b - a)) / (b - a)
        } else {
            -self.step.slope((d - s) / (d - c)) / (d - c)
        }
    }

    /// Sup of `|derivative|` times the band width; the same for every band.
    pub fn slope_constant(&self) -> f64 {
        self.step.slope(0.5)
    }
}

/// Tabulated smoothstep on `[0, 1]` with cubic Hermite interpolation (exact
/// derivative data, so interpolation error is far below 1e-12).
#[derive(Debug, Clone)]
struct SmoothStep {
    table: Vec<f64>,
    norm: f64,
}

const STEP_CELLS: usize = 2048;

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / s - 1.0 / (1.0 - s)).exp()
    }
}

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

impl SmoothStep {
    fn new() -> Self {
        let h = 1.0 / STEP_CELLS as f64;
        let mut table = Vec::with_capacity(STEP_CELLS + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 0..STEP_CELLS {
            let mid = (k as f64 + 0.5) * h;
            let mut cell = 0.0;
            for (node, weight) in GL5 {
                cell += weight * bump(mid + 0.5 * h * node);
            }
            acc += 0.5 * h * cell;
            table.push(acc);
        }
        let norm = acc;
        for v in table.iter_mut() {
            *v /= norm;
        }
        Self { table, norm }
    }

    fn value(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let h = 1.0 / STEP_CELLS as f64;
        let pos = s / h;
        let k = (pos as usize).min(STEP_CELLS - 1);
        let u = pos - k as f64;
        let (y0, y1) = (self.table[k], self.table[k + 1]);
        let (m0, m1) = (self.slope(k as f64 * h) * h, self.slope((k + 1) as f64 * h) * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }

    fn slope(&self, s: f64) -> f64 {
        bump(s) / self.norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> GeometryConfig {
        GeometryConfig::default()
    }

    #[test]
    fn phi_vanishes_at_vertex_and_is_even_in_t() {
        let c = cfg();
        assert_eq!(foliation_phi(0.0, c.r1(), &c), 0.0);
        for &(t, r) in &[(0.3, 0.2), (1.7, 2.9), (0.01, 5.0)] {
            assert_eq!(foliation_phi(t, r, &c), foliation_phi(-t, r, &c));
        }
    }

    #[test]
    fn phi_at_origin() {
        // (3/2)^2 / 2
        assert_abs_diff_eq!(foliation_phi(0.0, 0.0, &cfg()), 1.125, epsilon = 1e-15);
    }

    #[test]
    fn grad_phi_values() {
        let c = cfg();
        assert_eq!(grad_phi(0.0, c.r1(), &c), (0.0, 0.0));
        let (gt, gr) = grad_phi(0.5, 0.0, &c);
        assert_eq!((gt, gr), (0.5, -1.5));
        assert_abs_diff_eq!(minkowski(gt, gr), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(2.0 * foliation_phi(0.5, 0.0, &c), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn derived_radii() {
        let c = GeometryConfig::new(3.0, 1.4, 3, SpaceMode::RadialNd).unwrap();
        assert_eq!(c.r1(), 1.5 * 1.4);
        assert_eq!(c.r0_inner(), 13.0 * 1.4 / 14.0);
        assert!(c.r0_inner() < c.r_tilde && c.r_tilde < c.r1());
    }

    #[test]
    fn config_validation() {
        assert!(GeometryConfig::new(0.9, 1.0, 1, SpaceMode::Cartesian1d).is_err());
        assert!(GeometryConfig::new(2.0, 3.0, 1, SpaceMode::Cartesian1d).is_err());
        assert!(GeometryConfig::new(2.0, 0.4, 1, SpaceMode::Cartesian1d).is_err());
        assert!(GeometryConfig::new(2.0, 1.0, 3, SpaceMode::Cartesian1d).is_err());
        assert!(GeometryConfig::new(2.0, 1.0, 3, SpaceMode::RadialNd).is_ok());
    }

    #[test]
    fn cylinder_mask_on_aligned_grid_is_exact() {
        // Cell faces fall exactly on the cylinder's box edges.
        let c = cfg();
        let h = 0.05;
        let grid = GridSpec::new(-0.5 - 4.5 * h, 0.5 + 4.5 * h, -1.0 - 4.5 * h, 1.0 + 4.5 * h, 30, 50).unwrap();
        assert_abs_diff_eq!(grid.dt(), h, epsilon = 1e-12);
        assert_abs_diff_eq!(grid.dx(), h, epsilon = 1e-12);
        let mask = region_mask(&grid, &Region::Cylinder, &c).unwrap();
        for i in 0..grid.nt {
            for j in 0..grid.nx {
                let inside = grid.t(i).abs() < 0.5 && grid.x(j).abs() < 1.0;
                assert_eq!(mask.at(i, j), if inside { 1.0 } else { 0.0 }, "node ({i}, {j})");
            }
        }
    }

    #[test]
    fn empty_region_is_reported() {
        let grid = GridSpec::new(-0.5, 0.5, 5.0, 6.0, 9, 9).unwrap();
        assert_eq!(region_mask(&grid, &Region::Cylinder, &cfg()).unwrap_err(), LabError::EmptyRegion);
    }

    #[test]
    fn diamond_delta_measure_increases_to_diamond() {
        let c = cfg();
        let grid = GridSpec::new(-0.6, 0.6, -1.8, 1.8, 241, 721).unwrap();
        let full = region_measure(&grid, &Region::Diamond, &c).unwrap();
        // integral of 2 (3/2 - |t|) over |t| < 1/2
        let exact = 2.5;
        assert!((full - exact).abs() < 5e-3, "{full} vs {exact}");
        let mut prev = 0.0;
        for &delta in &[0.4, 0.3, 0.2, 0.1, 0.05, 0.02] {
            let m = region_measure(&grid, &Region::diamond_delta(delta), &c).unwrap();
            assert!(m >= prev - 1e-12);
            assert!(m <= full + 1e-12);
            prev = m;
        }
        assert!((full - prev) / full < 5e-3);
    }

    #[test]
    fn cutoff_rejects_zero_band() {
        assert_eq!(smooth_cutoff(CutoffSpec::new((0.0, 1.0), (0.0, 1.0))).unwrap_err(), LabError::DegenerateBand);
        assert_eq!(smooth_cutoff(CutoffSpec::new((0.0, 1.0), (0.2, 1.0))).unwrap_err(), LabError::DegenerateBand);
    }

    #[test]
    fn cutoff_plateau_and_outside() {
        let chi = smooth_cutoff(CutoffSpec::new((-1.0, 2.0), (0.0, 1.0))).unwrap();
        assert_eq!(chi.eval(0.5), 1.0);
        assert_eq!(chi.eval(-1.5), 0.0);
        assert_eq!(chi.eval(2.5), 0.0);
        let mut prev = 0.0;
        for k in 0..=1000 {
            let v = chi.eval(-1.0 + k as f64 * 1e-3);
            assert!(v >= prev - 1e-15 && v <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn cutoff_band_total_variation_is_one() {
        for &w in &[0.01, 0.3, 2.0, 17.0] {
            let chi = smooth_cutoff(CutoffSpec::new((0.0, 10.0 * w), (w, 9.0 * w))).unwrap();
            let m = 20_000;
            let h = w / m as f64;
            let tv: f64 = (0..m).map(|k| chi.derivative((k as f64 + 0.5) * h).abs() * h).sum();
            assert_abs_diff_eq!(tv, 1.0, epsilon = 1e-6);
            let sup = (0..m).map(|k| chi.derivative(k as f64 * h).abs()).fold(0.0, f64::max);
            assert!(sup * w <= chi.slope_constant() + 1e-9);
        }
    }

    #[test]
    fn cutoff_derivative_matches_finite_difference() {
        let chi = smooth_cutoff(CutoffSpec::new((0.0, 3.0), (1.0, 2.0))).unwrap();
        for k in 1..300 {
            let s = k as f64 * 0.01;
            let h = 1e-5;
            let fd = (chi.eval(s + h) - chi.eval(s - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, chi.derivative(s), epsilon = 1e-7);
        }
    }

    #[test]
    fn half_line_cutoff() {
        let chi = smooth_cutoff(CutoffSpec::new((f64::NEG_INFINITY, 1.0), (f64::NEG_INFINITY, 0.5))).unwrap();
        assert_eq!(chi.eval(-1e6), 1.0);
        assert_eq!(chi.eval(1.0), 0.0);
        assert!(chi.eval(0.75) > 0.0 && chi.eval(0.75) < 1.0);
    }
}
