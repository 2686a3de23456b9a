//! Fiber-map families and their concrete per-base-point maps.

use std::f64::consts::TAU;

use super::params::{CircleArc, ParamMap};
use crate::rng::splitmix64;

const HALF_ULP_UNIT: f64 = 1.0 / (1u64 << 53) as f64;
const ULP_UNIT: f64 = 1.0 / (1u64 << 52) as f64;

/// One map of the interval, already specialized to a base point.
///
/// At a discontinuity `eval` returns the right-lateral limit;
/// `left_limit` gives the other side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntervalMap {
    /// x ↦ kx mod 1 on [0,1] with f(1) = 1.
    Expanding { k: u32 },
    /// x ↦ a − x².
    Quadratic { a: f64 },
    /// x ↦ r x (1 − x).
    Logistic { r: f64 },
    /// Two increasing branches with neutral-ish fixed points at 0 and 1.
    Intermittent { t: f64, beta: f64, c: f64 },
    /// The doubling map rescaled onto every dyadic band (2^-n, 2^-n+1],
    /// collapsed to 0 below 2^-depth.
    Rescaled { depth: u32 },
}

#[inline]
fn refill_bit(x: f64) -> f64 {
    (splitmix64(x.to_bits()) & 1) as f64
}

impl IntervalMap {
    pub fn intermittent(t: f64, beta: f64) -> Self {
        IntervalMap::Intermittent { t, beta, c: 2f64.powf(beta) * (2.0 - t) }
    }

    /// f(x) along orbits. Doubling-type maps refill the lowest bit with a
    /// hash of x; see [`IntervalMap::eval_plain`] for the bare formula.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with(x, true)
    }

    /// f(x) without the low-bit refill. Used for structural computations
    /// (partitions, windows) where dyadic points must stay exact.
    #[inline]
    pub fn eval_plain(&self, x: f64) -> f64 {
        self.eval_with(x, false)
    }

    #[inline]
    fn eval_with(&self, x: f64, refill: bool) -> f64 {
        match *self {
            IntervalMap::Expanding { k } => {
                let y = k as f64 * x;
                let b = (y.floor() as u32).min(k - 1);
                let mut v = y - b as f64;
                // multiplying by k shifts a digit out at the top; a hashed bit
                // fills the bottom so orbits do not collapse onto 0 after ~53 steps
                if refill && v > 0.0 && v < 1.0 - HALF_ULP_UNIT {
                    v += refill_bit(x) * HALF_ULP_UNIT;
                }
                v.clamp(0.0, 1.0)
            }
            IntervalMap::Quadratic { a } => a - x * x,
            IntervalMap::Logistic { r } => (r * x * (1.0 - x)).clamp(0.0, 1.0),
            IntervalMap::Intermittent { t, beta, c } => {
                let v = if x < 0.5 {
                    t * x + c * x.powf(1.0 + beta)
                } else {
                    let u = 1.0 - x;
                    1.0 - t * u - c * u.powf(1.0 + beta)
                };
                v.clamp(0.0, 1.0)
            }
            IntervalMap::Rescaled { depth } => rescaled_eval(x, depth, refill),
        }
    }

    /// Limit of f(y) as y increases to x.
    pub fn left_limit(&self, x: f64) -> f64 {
        match *self {
            IntervalMap::Expanding { k } => {
                let y = k as f64 * x;
                if x > 0.0 && y.fract() == 0.0 {
                    1.0
                } else {
                    self.eval_plain(x)
                }
            }
            IntervalMap::Intermittent { .. } if x == 0.5 => 1.0,
            IntervalMap::Rescaled { depth } => {
                if x <= 0.0 {
                    return 0.0;
                }
                if x == (-(depth as f64)).exp2() {
                    return 0.0;
                }
                for n in 1..=depth {
                    let mid = (-(n as f64)).exp2() * 1.5;
                    if x == mid {
                        return (-(n as f64) + 1.0).exp2();
                    }
                }
                self.eval_plain(x)
            }
            _ => self.eval_plain(x),
        }
    }

    /// One-sided derivatives (left, right).
    pub fn deriv(&self, x: f64) -> (f64, f64) {
        match *self {
            IntervalMap::Expanding { k } => (k as f64, k as f64),
            IntervalMap::Quadratic { .. } => (-2.0 * x, -2.0 * x),
            IntervalMap::Logistic { r } => {
                let d = r * (1.0 - 2.0 * x);
                (d, d)
            }
            IntervalMap::Intermittent { t, beta, c } => {
                let left = |x: f64| t + c * (1.0 + beta) * x.max(0.0).powf(beta);
                let right = |x: f64| t + c * (1.0 + beta) * (1.0 - x).max(0.0).powf(beta);
                if x < 0.5 {
                    (left(x), left(x))
                } else if x == 0.5 {
                    (left(x), right(x))
                } else {
                    (right(x), right(x))
                }
            }
            IntervalMap::Rescaled { depth } => {
                let floor = (-(depth as f64)).exp2();
                if x < floor {
                    (0.0, 0.0)
                } else if x == floor {
                    (0.0, 2.0)
                } else {
                    (2.0, 2.0)
                }
            }
        }
    }

    /// Right derivative, the one used along orbits.
    #[inline]
    pub fn deriv_right(&self, x: f64) -> f64 {
        match *self {
            IntervalMap::Expanding { k } => k as f64,
            IntervalMap::Quadratic { .. } => -2.0 * x,
            IntervalMap::Logistic { r } => r * (1.0 - 2.0 * x),
            _ => self.deriv(x).1,
        }
    }

    /// Closed-form (f', f'', f''') away from breakpoints.
    pub fn derivs3(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            IntervalMap::Expanding { k } => (k as f64, 0.0, 0.0),
            IntervalMap::Rescaled { .. } => (self.deriv(x).1, 0.0, 0.0),
            IntervalMap::Quadratic { .. } => (-2.0 * x, -2.0, 0.0),
            IntervalMap::Logistic { r } => (r * (1.0 - 2.0 * x), -2.0 * r, 0.0),
            IntervalMap::Intermittent { t, beta, c } => {
                let k = c * (1.0 + beta);
                if x < 0.5 {
                    (
                        t + k * x.powf(beta),
                        k * beta * x.powf(beta - 1.0),
                        k * beta * (beta - 1.0) * x.powf(beta - 2.0),
                    )
                } else {
                    let u = 1.0 - x;
                    (
                        t + k * u.powf(beta),
                        -k * beta * u.powf(beta - 1.0),
                        k * beta * (beta - 1.0) * u.powf(beta - 2.0),
                    )
                }
            }
        }
    }
}

fn rescaled_eval(x: f64, depth: u32, refill: bool) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    // x in [2^-n, 2^-n+1)
    let n = -(x.log2().floor()) as i32;
    let n = if (-(n as f64)).exp2() > x { n + 1 } else { n };
    if n > depth as i32 {
        return 0.0;
    }
    let scale = (n as f64).exp2();
    // both products are exact: scaling by powers of two and subtracting 1 from [1,2)
    let u = x * scale - 1.0;
    let mut w = if u < 0.5 { 2.0 * u } else { 2.0 * u - 1.0 };
    if refill && w > 0.0 && w < 1.0 - ULP_UNIT {
        w += refill_bit(x) * ULP_UNIT;
    }
    (1.0 + w) / scale
}

/// A torus map x ↦ A x + (ε/2π)(sin 2πy, sin 2πx) mod 1 with integer A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusMap {
    pub matrix: [[f64; 2]; 2],
    pub eps: f64,
}

impl TorusMap {
    pub fn new(matrix: [[i64; 2]; 2], eps: f64) -> Self {
        let m = [[matrix[0][0] as f64, matrix[0][1] as f64], [matrix[1][0] as f64, matrix[1][1] as f64]];
        TorusMap { matrix: m, eps }
    }

    pub fn identity() -> Self {
        TorusMap::new([[1, 0], [0, 1]], 0.0)
    }

    #[inline]
    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        let [x, y] = p;
        let m = &self.matrix;
        let k = self.eps / TAU;
        let u = m[0][0] * x + m[0][1] * y + k * (TAU * y).sin();
        let v = m[1][0] * x + m[1][1] * y + k * (TAU * x).sin();
        [wrap_unit(u), wrap_unit(v)]
    }

    #[inline]
    pub fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let [x, y] = p;
        let m = &self.matrix;
        [
            [m[0][0], m[0][1] + self.eps * (TAU * y).cos()],
            [m[1][0] + self.eps * (TAU * x).cos(), m[1][1]],
        ]
    }

    /// Smallest and largest singular values of the Jacobian.
    #[inline]
    pub fn singular_values(&self, p: [f64; 2]) -> (f64, f64) {
        singular_values(self.jacobian(p))
    }

    pub(crate) fn matrix_is_integral(&self) -> bool {
        self.matrix.iter().flatten().all(|v| v.fract() == 0.0)
    }
}

/// Closed-form singular values (σ_min, σ_max) of a 2×2 matrix.
#[inline]
pub fn singular_values(j: [[f64; 2]; 2]) -> (f64, f64) {
    let s = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[1][0] * j[1][0] + j[1][1] * j[1][1];
    let det = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs();
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let big = ((s + disc) / 2.0).sqrt();
    // σ_min σ_max = |det| avoids cancellation in (s − disc)/2
    let small = if big > 0.0 { det / big } else { 0.0 };
    (small, big)
}

#[inline]
fn wrap_unit(u: f64) -> f64 {
    let w = u.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Torus fibers: one map on an arc of the base circle, another off it.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusFamily {
    pub inside: TorusMap,
    pub outside: TorusMap,
    pub arc: CircleArc,
}

impl TorusFamily {
    /// Expanding on the arc, the identity elsewhere; discontinuous in the base
    /// at the two arc endpoints.
    pub fn identity_patch(inside: TorusMap, arc: CircleArc) -> Self {
        TorusFamily { inside, outside: TorusMap::identity(), arc }
    }
}

/// A parametrized family θ ↦ f_θ.
#[derive(Clone, Debug, PartialEq)]
pub enum FiberFamily {
    ExpandingInterval { k: u32 },
    Quadratic { a: ParamMap, lo: f64, hi: f64 },
    Logistic { r: ParamMap },
    Intermittent { beta: f64, t: ParamMap },
    RescaledDoubling { depth: u32 },
    Torus(TorusFamily),
}

/// The fiber space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Torus,
}

impl Domain {
    pub fn length(&self) -> f64 {
        match self {
            Domain::Interval { lo, hi } => hi - lo,
            Domain::Torus => 1.0,
        }
    }
}

/// A point of the fiber space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiberPoint {
    Line(f64),
    Torus([f64; 2]),
}

impl FiberPoint {
    pub fn as_line(&self) -> Option<f64> {
        match self {
            FiberPoint::Line(x) => Some(*x),
            FiberPoint::Torus(_) => None,
        }
    }
}

/// A fiber map specialized to one base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiberMap {
    Interval(IntervalMap),
    Torus(TorusMap),
}
