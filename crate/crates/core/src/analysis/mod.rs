//! Expansion diagnostics along orbits: Pliss times, hyperbolic times,
//! monotonicity windows and distortion.

mod hyperbolic;
mod intervals;
mod pliss;
pub(crate) mod roots;
mod windows;

pub use hyperbolic::{hyperbolic_times, truncated_distance};
pub use intervals::IntervalSet;
pub use pliss::{pliss_times, pliss_times_linear, PlissReport};
pub use windows::{
    distortion_ratio, hyperbolic_like_set, hyperbolic_like_set_with_cap, koebe_window, monotonicity_window,
    HyperbolicLikeSets, Window, MIN_WINDOW_ULPS, ROOT_TOL,
};

pub(crate) use windows::{bracket_and_solve, compose, maps_along, piece, piece_image};
