//! Explicit leapfrog solver for `(d_t^2 - Laplacian + q) u = f` with a
//! time-independent potential.
//!
//! The spatial operator is written in flux form,
//! `A u_j = (F_{j+1/2} - F_{j-1/2}) / (r_j^c dx)` with
//! `F_{j+1/2} = r_{j+1/2}^c (u_{j+1} - u_j) / dx` and `c = n - 1` in radial
//! mode, so that it is symmetric in the weighted inner product
//! `sum_j w_j u_j v_j`. That symmetry is what makes the leapfrog energy
//! [`energy_history`] an exact invariant when `f = 0`.

mod recipes;

pub use recipes::{diamond_grid, manufacture_solutions, EnsembleSpec, ManufacturedSolution, Recipe};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{GeometryConfig, SpaceMode};
use crate::grid::{gradient, GridSpec, ScalarField};

/// Largest Courant number accepted.
pub const MAX_CFL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Homogeneous Dirichlet at both ends (Neumann at `r_min` in radial mode).
    #[default]
    Zero,
    /// The last grid column is identified with the first.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyProblem {
    pub grid: GridSpec,
    pub geometry: GeometryConfig,
    /// Potential sampled on the spatial grid.
    pub q: Option<Vec<f64>>,
    pub f: Option<ScalarField>,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub cfl: f64,
    pub boundary: Boundary,
}

impl CauchyProblem {
    /// Homogeneous problem with the given Cauchy data and default geometry.
    pub fn new(grid: GridSpec, u0: Vec<f64>, u1: Vec<f64>) -> Self {
        Self {
            grid,
            geometry: GeometryConfig::default(),
            q: None,
            f: None,
            u0,
            u1,
            cfl: MAX_CFL,
            boundary: Boundary::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.grid;
        g.validate()?;
        if self.u0.len() != g.nx || self.u1.len() != g.nx {
            return Err(LabError::InvalidGrid(format!(
                "Cauchy data must have {} samples (got {} and {})",
                g.nx,
                self.u0.len(),
                self.u1.len()
            )));
        }
        if let Some(q) = &self.q {
            if q.len() != g.nx {
                return Err(LabError::InvalidGrid(format!("potential must have {} samples", g.nx)));
            }
            if q.iter().any(|v| !v.is_finite()) {
                return Err(LabError::InvalidParameter("potential is not finite".into()));
            }
        }
        if let Some(f) = &self.f {
            if f.grid != g {
                return Err(LabError::GridMismatch);
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return Err(LabError::InvalidParameter(format!("cfl = {} outside (0, {MAX_CFL}]", self.cfl)));
        }
        let ratio = g.dt() / g.dx();
        if ratio > self.cfl * (1.0 + 1e-12) {
            return Err(LabError::CflViolation { ratio, limit: self.cfl });
        }
        if self.geometry.mode == SpaceMode::RadialNd {
            g.validate_for(&self.geometry)?;
            if self.boundary == Boundary::Periodic {
                return Err(LabError::InvalidParameter("periodic boundary is cartesian-only".into()));
            }
        }
        Ok(())
    }
}

/// A time grid on `[t_min, t_max]` whose step is the largest not exceeding
/// `cfl dx`.
pub fn time_grid(t: (f64, f64), x: (f64, f64), nx: usize, cfl: f64) -> Result<GridSpec> {
    let dx = (x.1 - x.0) / (nx as f64 - 1.0);
    let steps = ((t.1 - t.0) / (cfl * dx)).ceil().max(4.0) as usize;
    GridSpec::new(t.0, t.1, x.0, x.1, steps + 1, nx)
}

/// The discrete spatial operator and its quadrature weights.
#[derive(Debug, Clone)]
struct SpatialOp {
    /// Right interface weights `r_{j+1/2}^c / dx` for each active link.
    link: Vec<f64>,
    weight: Vec<f64>,
    boundary: Boundary,
    neumann_left: bool,
    n: usize,
}

impl SpatialOp {
    fn new(grid: &GridSpec, cfg: &GeometryConfig, boundary: Boundary) -> Self {
        let dx = grid.dx();
        let c = cfg.radial_coeff();
        let radial = cfg.mode == SpaceMode::RadialNd;
        let pw = |r: f64| if c == 0.0 { 1.0 } else { r.powf(c) };
        let n = if boundary == Boundary::Periodic { grid.nx - 1 } else { grid.nx };
        let link = (0..n).map(|j| pw(grid.x(j) + 0.5 * dx) / dx).collect();
        let mut weight: Vec<f64> = (0..n).map(|j| pw(grid.x(j)) * dx).collect();
        if radial {
            weight[0] *= 0.5;
        }
        Self { link, weight, boundary, neumann_left: radial, n }
    }

    /// Index of the right neighbour of `j`, if the link `j -> j+1` exists.
    #[inline]
    fn right(&self, j: usize) -> Option<usize> {
        match self.boundary {
            Boundary::Periodic => Some((j + 1) % self.n),
            Boundary::Zero => (j + 1 < self.n).then_some(j + 1),
        }
    }

    /// Whether node `j` is held at zero.
    #[inline]
    fn pinned(&self, j: usize) -> bool {
        self.boundary == Boundary::Zero && (j == self.n - 1 || (j == 0 && !self.neumann_left))
    }

    /// `out_j = (A u)_j` on free nodes, zero on pinned ones.
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            if let Some(k) = self.right(j) {
                let flux = self.link[j] * (u[k] - u[j]);
                out[j] += flux;
                out[k] -= flux;
            }
        }
        for (j, o) in out.iter_mut().enumerate().take(self.n) {
            *o = if self.pinned(j) { 0.0 } else { *o / self.weight[j] };
        }
    }

    /// `<K a, b>` with `K = -A + q`, summed over free nodes.
    fn stiffness(&self, a: &[f64], b: &[f64], q: Option<&[f64]>) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            if let Some(k) = self.right(j) {
                s += self.link[j] * (a[k] - a[j]) * (b[k] - b[j]);
            }
            if let Some(q) = q {
                if !self.pinned(j) {
                    s += self.weight[j] * q[j] * a[j] * b[j];
                }
            }
        }
        s
    }

    fn mass(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..self.n).filter(|&j| !self.pinned(j)).map(|j| self.weight[j] * a[j] * b[j]).sum()
    }
}

fn source_row(f: Option<&ScalarField>, i: usize, nt: usize, n: usize) -> Vec<f64> {
    let Some(f) = f else { return vec![0.0; n] };
    let row = |k: usize| &f.row(k)[..n];
    // Trapezoid of the two half-step averages: (f_{i-1} + 2 f_i + f_{i+1}) / 4.
    let (lo, hi) = (i.saturating_sub(1), (i + 1).min(nt - 1));
    let (a, b, c) = (row(lo), row(i), row(hi));
    (0..n).map(|j| 0.25 * (a[j] + 2.0 * b[j] + c[j])).collect()
}

/// Three-level leapfrog with a Taylor first step. Returns `u` on the full
/// space-time grid.
pub fn solve(problem: &CauchyProblem) -> Result<ScalarField> {
    problem.validate()?;
    let g = problem.grid;
    let op = SpatialOp::new(&g, &problem.geometry, problem.boundary);
    let n = op.n;
    let dt2 = g.dt() * g.dt();
    let q = problem.q.as_deref();
    let f = problem.f.as_ref();
    let mut out = ScalarField::zeros(g);

    let rhs = |u: &[f64], i: usize, scratch: &mut Vec<f64>| {
        op.apply(u, scratch);
        let src = source_row(f, i, g.nt, n);
        for j in 0..n {
            let pot = q.map_or(0.0, |q| q[j] * u[j]);
            scratch[j] = if op.pinned(j) { 0.0 } else { scratch[j] - pot + src[j] };
        }
    };

    let mut prev: Vec<f64> = problem.u0[..n].to_vec();
    for (j, p) in prev.iter_mut().enumerate() {
        if op.pinned(j) {
            *p = 0.0;
        }
    }
    let mut acc = vec![0.0; n];
    rhs(&prev, 0, &mut acc);
    let mut cur: Vec<f64> = (0..n)
        .map(|j| if op.pinned(j) { 0.0 } else { prev[j] + g.dt() * problem.u1[j] + 0.5 * dt2 * acc[j] })
        .collect();

    let store = |out: &mut ScalarField, i: usize, u: &[f64]| {
        for (j, v) in u.iter().enumerate() {
            out.set(i, j, *v);
        }
        if problem.boundary == Boundary::Periodic {
            out.set(i, g.nx - 1, u[0]);
        }
    };
    store(&mut out, 0, &prev);
    if g.nt > 1 {
        store(&mut out, 1, &cur);
    }
    for i in 1..g.nt - 1 {
        rhs(&cur, i, &mut acc);
        let next: Vec<f64> = (0..n).map(|j| 2.0 * cur[j] - prev[j] + dt2 * acc[j]).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFiniteDetected { step: i + 1 });
        }
        store(&mut out, i + 1, &next);
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// The leapfrog invariant at each half step `i + 1/2`,
/// `E = |(u^{i+1} - u^i)/dt|^2 / 2 + <K u^{i+1}, u^i> / 2`,
/// which is constant when `f = 0`.
pub fn energy_history(u: &ScalarField, problem: &CauchyProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    if u.grid != problem.grid {
        return Err(LabError::GridMismatch);
    }
    let g = problem.grid;
    let op = SpatialOp::new(&g, &problem.geometry, problem.boundary);
    let n = op.n;
    let dt = g.dt();
    let q = problem.q.as_deref();
    Ok((0..g.nt - 1)
        .map(|i| {
            let a = &u.row(i)[..n];
            let b = &u.row(i + 1)[..n];
            let vel: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) / dt).collect();
            0.5 * op.mass(&vel, &vel) + 0.5 * op.stiffness(b, a, q)
        })
        .collect())
}

/// `max_i |E_i - E_0| / |E_0|` (zero for a vanishing solution).
pub fn energy_drift(u: &ScalarField, problem: &CauchyProblem) -> Result<f64> {
    let e = energy_history(u, problem)?;
    let e0 = e[0];
    if e0 == 0.0 {
        return Ok(0.0);
    }
    Ok(e.iter().map(|v| (v - e0).abs()).fold(0.0, f64::max) / e0.abs())
}

/// Fraction of the space-time energy `int (u_t^2 + |grad_x u|^2) / 2` lying
/// outside the cone `{dist(x) <= radius + (t - t_min) + 2 dx}`, where `dist`
/// is `|x|` in cartesian mode and `r` in radial mode. The two-cell margin
/// covers the difference stencil of the energy density.
pub fn finite_speed_leakage(u: &ScalarField, initial_support_radius: f64, cfg: &GeometryConfig) -> Result<f64> {
    let g = u.grid;
    let grad = gradient(u)?;
    let (mut inside, mut outside) = (0.0, 0.0);
    for i in 0..g.nt {
        let reach = initial_support_radius + (g.t(i) - g.t_min) + 2.0 * g.dx();
        for j in 0..g.nx {
            let dist = cfg.radius(g.x(j));
            let w = crate::grid::radial_density(dist, cfg);
            let e = 0.5 * (grad.t.at(i, j).powi(2) + grad.x.at(i, j).powi(2)) * w;
            if dist <= reach {
                inside += e;
            } else {
                outside += e;
            }
        }
    }
    let total = inside + outside;
    Ok(if total == 0.0 { 0.0 } else { outside / total })
}
