//! Seeded compactly supported test functions.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on std builds
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{GridSpec, ScalarField};

/// `amp * b((t - t0)/ht) * b((r - r0)/hr) * cos(kt t + kr r + phase)` with the
/// `C^inf` bump `b(s) = exp(1 - 1/(1 - s^2))` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub t0: f64,
    pub r0: f64,
    pub ht: f64,
    pub hr: f64,
    pub kt: f64,
    pub kr: f64,
    pub phase: f64,
    pub amp: f64,
}

fn profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl BumpSpec {
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let env = profile((t - self.t0) / self.ht) * profile((r - self.r0) / self.hr);
        if env == 0.0 {
            return 0.0;
        }
        self.amp * env * (self.kt * t + self.kr * r + self.phase).cos()
    }

    pub fn sample(&self, grid: GridSpec) -> ScalarField {
        ScalarField::from_fn(grid, |t, x| self.eval(t, x))
    }

    /// Closed support box `([t_lo, t_hi], [r_lo, r_hi])`.
    pub fn support(&self) -> ((f64, f64), (f64, f64)) {
        ((self.t0 - self.ht, self.t0 + self.ht), (self.r0 - self.hr, self.r0 + self.hr))
    }
}

/// Box every bump of a battery must fit in, plus the largest wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpWindow {
    pub t: (f64, f64),
    pub r: (f64, f64),
    pub max_wavenumber: f64,
}

/// `count` bumps with random centres, half-widths between 30% and 50% of the
/// window and wavenumbers up to `max_wavenumber`, all contained in `window`.
pub fn battery(seed: u64, count: usize, window: BumpWindow) -> Vec<BumpSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_t = 0.5 * (window.t.1 - window.t.0);
    let half_r = 0.5 * (window.r.1 - window.r.0);
    (0..count)
        .map(|_| {
            let ht = half_t * rng.gen_range(0.6..1.0);
            let hr = half_r * rng.gen_range(0.6..1.0);
            let t0 = rng.gen_range(window.t.0 + ht..=window.t.1 - ht);
            let r0 = rng.gen_range(window.r.0 + hr..=window.r.1 - hr);
            let k = window.max_wavenumber;
            BumpSpec {
                t0,
                r0,
                ht,
                hr,
                kt: rng.gen_range(-k..=k),
                kr: rng.gen_range(-k..=k),
                phase: rng.gen_range(0.0..core::f64::consts::TAU),
                amp: rng.gen_range(0.5..2.0),
            }
        })
        .collect()
}
