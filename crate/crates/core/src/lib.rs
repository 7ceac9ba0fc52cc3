//! Numerical laboratory for Carleman estimates of the Minkowski wave operator.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of value-type inputs, so callers are free to fan work out across
//! threads.
#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod carleman;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod grid;
pub mod ledger;
pub mod multipliers;
pub mod stability;
pub mod wave;

pub use error::{LabError, Result};
pub use geometry::{GeometryConfig, Level, Region, SpaceMode};
pub use grid::{GridSpec, NormKind, ScalarField, VectorField};
