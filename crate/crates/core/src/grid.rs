//! Uniform space-time grids, sampled fields, finite-difference operators and
//! region-restricted norms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{region_mask, GeometryConfig, Region, SpaceMode};

/// Tensor grid over `[t_min, t_max] x [x_min, x_max]`; in radial mode the
/// spatial axis is the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub nt: usize,
    pub nx: usize,
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, x_min: f64, x_max: f64, nt: usize, nx: usize) -> Result<Self> {
        let g = Self { t_min, t_max, x_min, x_max, nt, nx };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt < 5 || self.nx < 5 {
            return Err(LabError::GridTooSmall { nt: self.nt, nx: self.nx });
        }
        let finite = [self.t_min, self.t_max, self.x_min, self.x_max].iter().all(|v| v.is_finite());
        if !finite || self.t_max <= self.t_min || self.x_max <= self.x_min {
            return Err(LabError::InvalidGrid(format!(
                "extents must be finite and increasing: t [{}, {}], x [{}, {}]",
                self.t_min, self.t_max, self.x_min, self.x_max
            )));
        }
        Ok(())
    }

    /// Radial grids must stay away from the axis.
    pub fn validate_for(&self, cfg: &GeometryConfig) -> Result<()> {
        self.validate()?;
        if cfg.mode == SpaceMode::RadialNd && self.x_min <= 0.0 {
            return Err(LabError::InvalidGrid(format!("radial grid needs r_min > 0, got {}", self.x_min)));
        }
        Ok(())
    }

    /// Same extents, `2 n - 1` points per axis.
    pub fn refined(&self) -> Self {
        Self { nt: 2 * self.nt - 1, nx: 2 * self.nx - 1, ..*self }
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.nt - 1) as f64
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.dt()
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nx + j
    }

    /// Volume of the dual cell around column `j`: `dt dx` times the radial
    /// density `c_n r^(n-1)` in radial mode.
    pub fn cell_volume(&self, j: usize, cfg: &GeometryConfig) -> f64 {
        self.dt() * self.dx() * radial_density(self.x(j), cfg)
    }
}

/// `c_n r^(n-1)` in radial mode, 1 otherwise.
pub fn radial_density(r: f64, cfg: &GeometryConfig) -> f64 {
    match cfg.mode {
        SpaceMode::Cartesian1d => 1.0,
        SpaceMode::RadialNd => sphere_area(cfg.n) * r.abs().powi(cfg.n as i32 - 1),
    }
}

/// Surface area of the unit sphere in `R^n`, `2 pi^(n/2) / Gamma(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / libm::tgamma(h)
}

/// Real samples on a grid, row-major with time as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_vec(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nt,
                grid.nx
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidParameter("field contains non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nt {
            let t = grid.t(i);
            for j in 0..grid.nx {
                values.push(f(t, grid.x(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nx + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nx = self.grid.nx;
        self.values[i * nx + j] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Time row `i` as a slice of `nx` values.
    pub fn row(&self, i: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[i * nx..(i + 1) * nx]
    }

    /// Time column at spatial index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.grid.nt).map(|i| self.at(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        for (i, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    /// Smallest number of cells between the nonzero samples and the grid edge.
    pub fn support_margin(&self) -> usize {
        let g = self.grid;
        let mut margin = usize::MAX;
        for i in 0..g.nt {
            for j in 0..g.nx {
                if self.at(i, j) != 0.0 {
                    let m = i.min(g.nt - 1 - i).min(j).min(g.nx - 1 - j);
                    margin = margin.min(m);
                }
            }
        }
        margin
    }
}

/// A pair of fields `(X^t, X^x)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub t: ScalarField,
    pub x: ScalarField,
}

impl VectorField {
    pub fn new(t: ScalarField, x: ScalarField) -> Result<Self> {
        if t.grid != x.grid {
            return Err(LabError::GridMismatch);
        }
        Ok(Self { t, x })
    }

    pub fn grid(&self) -> GridSpec {
        self.t.grid
    }
}

#[inline]
pub(crate) fn d1(u: &ScalarField, i: usize, j: usize) -> (f64, f64) {
    let g = &u.grid;
    let nx = g.nx;
    let v = &u.values;
    let k = i * nx + j;
    (
        (v[k + nx] - v[k - nx]) / (2.0 * g.dt()),
        (v[k + 1] - v[k - 1]) / (2.0 * g.dx()),
    )
}

#[inline]
pub(crate) fn d2(u: &ScalarField, i: usize, j: usize) -> (f64, f64) {
    let g = &u.grid;
    let nx = g.nx;
    let v = &u.values;
    let k = i * nx + j;
    let (dt, dx) = (g.dt(), g.dx());
    (
        (v[k + nx] - 2.0 * v[k] + v[k - nx]) / (dt * dt),
        (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (dx * dx),
    )
}

/// `(d_t^2 - Laplacian + q) u` by central differences on interior points; the
/// boundary ring is set to zero. In radial mode the Laplacian carries the
/// `(n-1)/r d_r` term.
pub fn apply_box(u: &ScalarField, q: Option<&ScalarField>, cfg: &GeometryConfig) -> Result<ScalarField> {
    let g = u.grid;
    if g.nt < 5 || g.nx < 5 {
        return Err(LabError::GridTooSmall { nt: g.nt, nx: g.nx });
    }
    if let Some(q) = q {
        if q.grid != g {
            return Err(LabError::GridMismatch);
        }
    }
    let c = cfg.radial_coeff();
    let mut out = ScalarField::zeros(g);
    for i in 1..g.nt - 1 {
        for j in 1..g.nx - 1 {
            let (utt, urr) = d2(u, i, j);
            let mut lap = urr;
            if c != 0.0 {
                lap += c / g.x(j) * d1(u, i, j).1;
            }
            let mut val = utt - lap;
            if let Some(q) = q {
                val += q.at(i, j) * u.at(i, j);
            }
            out.set(i, j, val);
        }
    }
    Ok(out)
}

/// `(d_t u, d_x u)`: central differences inside, second-order one-sided at the
/// edges.
pub fn gradient(u: &ScalarField) -> Result<VectorField> {
    let g = u.grid;
    g.validate()?;
    let (dt, dx) = (g.dt(), g.dx());
    let mut ut = ScalarField::zeros(g);
    let mut ux = ScalarField::zeros(g);
    for i in 0..g.nt {
        for j in 0..g.nx {
            let vt = if i == 0 {
                (-3.0 * u.at(0, j) + 4.0 * u.at(1, j) - u.at(2, j)) / (2.0 * dt)
            } else if i == g.nt - 1 {
                (3.0 * u.at(i, j) - 4.0 * u.at(i - 1, j) + u.at(i - 2, j)) / (2.0 * dt)
            } else {
                (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * dt)
            };
            let vx = if j == 0 {
                (-3.0 * u.at(i, 0) + 4.0 * u.at(i, 1) - u.at(i, 2)) / (2.0 * dx)
            } else if j == g.nx - 1 {
                (3.0 * u.at(i, j) - 4.0 * u.at(i, j - 1) + u.at(i, j - 2)) / (2.0 * dx)
            } else {
                (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * dx)
            };
            ut.set(i, j, vt);
            ux.set(i, j, vx);
        }
    }
    VectorField::new(ut, ux)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    /// `L2` plus the full space-time gradient.
    H1,
    /// `L2` plus the spatial gradient only.
    H1x,
}

/// Weighted integral `sum w_ij f_ij vol_j` with an optional mask.
pub fn integrate(f: &ScalarField, mask: Option<&ScalarField>, cfg: &GeometryConfig) -> f64 {
    let g = f.grid;
    let mut total = 0.0;
    for j in 0..g.nx {
        let vol = g.cell_volume(j, cfg);
        let mut col = 0.0;
        for i in 0..g.nt {
            let w = mask.map_or(1.0, |m| m.at(i, j));
            col += w * f.at(i, j);
        }
        total += col * vol;
    }
    total
}

/// Squared norm over a precomputed mask.
pub fn norm_sq_masked(u: &ScalarField, mask: &ScalarField, kind: NormKind, cfg: &GeometryConfig) -> Result<f64> {
    if mask.grid != u.grid {
        return Err(LabError::GridMismatch);
    }
    let sq = u.map(|v| v * v);
    let mut total = integrate(&sq, Some(mask), cfg);
    if kind != NormKind::L2 {
        let grad = gradient(u)?;
        total += integrate(&grad.x.map(|v| v * v), Some(mask), cfg);
        if kind == NormKind::H1 {
            total += integrate(&grad.t.map(|v| v * v), Some(mask), cfg);
        }
    }
    Ok(total)
}

/// `L2`, `H1` or `H1x` norm of `u` restricted to `region`.
pub fn norm(u: &ScalarField, region: &Region, kind: NormKind, cfg: &GeometryConfig) -> Result<f64> {
    let mask = region_mask(&u.grid, region, cfg)?;
    Ok(norm_sq_masked(u, &mask, kind, cfg)?.sqrt())
}

/// Ordinary least-squares line through `(x, y)` pairs: `(slope, intercept)`.
/// Needs two distinct abscissae.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(LabError::InsufficientSweep { got: xs.len().min(ys.len()), need: 2 });
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidParameter("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
