//! Numerical tools for random interval and torus maps presented as skew
//! products: orbits and derivative cocycles, Pliss and hyperbolic times,
//! monotonicity windows, empirical invariant measures, ergodic-component
//! clustering and the monotone-branch census.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod combinatorics;
pub mod decomposition;
pub mod ensemble;
pub mod error;
pub mod fixtures;
pub mod measures;
pub mod orbits;
pub mod rng;
pub mod systems;

pub use error::{LabError, Result};
