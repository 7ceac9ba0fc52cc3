//! Seeded solution ensembles on the diamond's bounding grid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{solve, time_grid, Boundary, CauchyProblem};
use crate::error::{LabError, Result};
use crate::geometry::{GeometryConfig, SpaceMode};
use crate::grid::{apply_box, GridSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Recipe {
    /// Exact traveling waves `A sin(k x -+ k t + phase)`, sampled directly.
    PlaneWave { k_min: f64, k_max: f64 },
    /// A Gaussian pulse starting at `R <= |x0| <= 2R` and moving toward `x = 0`.
    FocusedBump { width: f64 },
    /// Random trigonometric data under a smooth window on `|x| < 2R`.
    RandomBandLimited { modes: usize, k_max: f64 },
    /// Data supported in `2R + gap <= |x| <= 3R + gap`, hence invisible on
    /// the diamond for `|t| <= R/2` when `gap >= 0`. Negative gaps down to
    /// `-R` let the data reach the diamond, for degradation sweeps.
    FarSupport { gap: f64 },
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::PlaneWave { .. } => "plane-wave",
            Recipe::FocusedBump { .. } => "focused-bump",
            Recipe::RandomBandLimited { .. } => "random-band-limited",
            Recipe::FarSupport { .. } => "far-support",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub recipe: Recipe,
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Sup norm of the seeded potential; zero means `q = 0`.
    #[serde(default)]
    pub q_amplitude: f64,
    #[serde(default)]
    pub geometry: GeometryConfig,
}

fn default_nx() -> usize {
    801
}

fn default_cfl() -> f64 {
    0.9
}

impl EnsembleSpec {
    pub fn new(recipe: Recipe, count: usize, seed: u64) -> Self {
        Self { recipe, count, seed, nx: default_nx(), cfl: default_cfl(), q_amplitude: 0.0, geometry: GeometryConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::InvalidRecipe(m));
        if self.count == 0 {
            return bad("ensemble is empty".into());
        }
        if self.geometry.mode != SpaceMode::Cartesian1d {
            return bad("ensembles live on the cartesian-1d diamond grid".into());
        }
        if !(self.q_amplitude >= 0.0 && self.q_amplitude.is_finite()) {
            return bad(format!("q_amplitude = {}", self.q_amplitude));
        }
        match self.recipe {
            Recipe::PlaneWave { k_min, k_max } => {
                if !(k_min > 0.0 && k_max >= k_min) {
                    return bad(format!("plane-wave wavenumbers [{k_min}, {k_max}]"));
                }
                if self.q_amplitude != 0.0 {
                    return bad("plane waves are exact only for q = 0".into());
                }
            }
            Recipe::FocusedBump { width } => {
                if !(width > 0.0) {
                    return bad(format!("width = {width}"));
                }
            }
            Recipe::RandomBandLimited { modes, k_max } => {
                if modes == 0 || !(k_max > 0.0) {
                    return bad(format!("band-limited data with {modes} modes up to k = {k_max}"));
                }
            }
            Recipe::FarSupport { gap } => {
                if !(gap > -self.geometry.r_tilde) {
                    return bad(format!("gap = {gap} would put data inside the cylinder"));
                }
            }
        }
        Ok(())
    }
}

/// `t in [-R/2, R/2]`, `x in [-4R, 4R]`: wide enough that waves leaving the
/// data region never return to the diamond.
pub fn diamond_grid(cfg: &GeometryConfig, nx: usize, cfl: f64) -> Result<GridSpec> {
    let r = cfg.r_tilde;
    time_grid((-0.5 * r, 0.5 * r), (-4.0 * r, 4.0 * r), nx, cfl)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSolution {
    pub label: String,
    pub member: usize,
    pub u: ScalarField,
    /// `(box + q) u` evaluated by central differences.
    pub f: ScalarField,
    pub q: Vec<f64>,
}

fn smooth_window(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Builds the ensemble member by member; member `i` draws from stream `i`
/// of a ChaCha generator keyed by the seed, so members are independent of
/// `count`.
pub fn manufacture_solutions(spec: &EnsembleSpec) -> Result<Vec<ManufacturedSolution>> {
    spec.validate()?;
    let cfg = spec.geometry;
    let grid = diamond_grid(&cfg, spec.nx, spec.cfl)?;
    let big_r = cfg.r_tilde;
    (0..spec.count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let q: Vec<f64> = if spec.q_amplitude > 0.0 {
                let (k, ph) = (rng.gen_range(0.5..3.0), rng.gen_range(0.0..core::f64::consts::TAU));
                (0..grid.nx).map(|j| spec.q_amplitude * (k * grid.x(j) + ph).cos()).collect()
            } else {
                alloc::vec![0.0; grid.nx]
            };
            let u = match spec.recipe {
                Recipe::PlaneWave { k_min, k_max } => {
                    let k = rng.gen_range(k_min..=k_max);
                    let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let ph = rng.gen_range(0.0..core::f64::consts::TAU);
                    let amp = rng.gen_range(0.5..2.0);
                    ScalarField::from_fn(grid, |t, x| amp * (k * x - dir * k * t + ph).sin())
                }
                _ => {
                    let (u0, u1) = cauchy_data(&spec.recipe, &grid, big_r, &mut rng);
                    let problem = CauchyProblem {
                        q: (spec.q_amplitude > 0.0).then(|| q.clone()),
                        cfl: spec.cfl,
                        boundary: Boundary::Zero,
                        geometry: cfg,
                        ..CauchyProblem::new(grid, u0, u1)
                    };
                    solve(&problem)?
                }
            };
            let qf = ScalarField::from_fn(grid, |_, x| q[grid_index(&grid, x)]);
            let f = apply_box(&u, Some(&qf), &cfg)?;
            Ok(ManufacturedSolution { label: format!("{}-{}", spec.recipe.name(), i), member: i, u, f, q })
        })
        .collect()
}

fn grid_index(grid: &GridSpec, x: f64) -> usize {
    (((x - grid.x_min) / grid.dx()).round() as usize).min(grid.nx - 1)
}

fn cauchy_data(recipe: &Recipe, grid: &GridSpec, big_r: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = (0..grid.nx).map(|j| grid.x(j)).collect();
    match *recipe {
        Recipe::FocusedBump { width } => {
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let x0 = side * rng.gen_range(big_r..=2.0 * big_r);
            let amp = rng.gen_range(0.5..2.0);
            let g = |x: f64| amp * (-((x - x0) / width).powi(2)).exp();
            let dg = |x: f64| -2.0 * (x - x0) / (width * width) * g(x);
            // Travelling toward the origin: g(x + t) for x0 > 0, g(x - t) otherwise.
            (xs.iter().map(|&x| g(x)).collect(), xs.iter().map(|&x| side * dg(x)).collect())
        }
        Recipe::RandomBandLimited { modes, k_max } => {
            let mut series = || {
                let terms: Vec<(f64, f64, f64)> = (0..modes)
                    .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..k_max), rng.gen_range(0.0..core::f64::consts::TAU)))
                    .collect();
                xs.iter()
                    .map(|&x| {
                        let s: f64 = terms.iter().map(|(a, k, p)| a * (k * x + p).cos()).sum();
                        s * smooth_window(x / (2.0 * big_r))
                    })
                    .collect::<Vec<f64>>()
            };
            let u0 = series();
            let u1 = series();
            (u0, u1)
        }
        Recipe::FarSupport { gap } => {
            let lo = 2.0 * big_r + gap;
            let shell = |x: f64| smooth_window((x.abs() - lo - 0.5 * big_r) / (0.5 * big_r));
            let (a, b) = (rng.gen_range(0.5..2.0), rng.gen_range(-2.0..2.0));
            let k = rng.gen_range(1.0..4.0);
            (
                xs.iter().map(|&x| a * shell(x) * (k * x).cos()).collect(),
                xs.iter().map(|&x| b * shell(x) * (k * x).sin()).collect(),
            )
        }
        Recipe::PlaneWave { .. } => unreachable!("plane waves are sampled, not solved"),
    }
}
