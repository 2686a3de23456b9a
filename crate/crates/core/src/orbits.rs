//! Forward orbits, backward compositions along sampled base branches, and the
//! logarithmic derivative cocycle.

use std::io::{self, Write};

use rand::Rng;

use crate::error::Result;
use crate::systems::{nearest_distance, BaseKind, BaseState, FiberMap, FiberPoint, IntervalMap, SkewSystem, TOL_BP};

/// Clipping floor for log-derivatives near critical points.
pub const LOG_FLOOR: f64 = -46.0;

// fixed-point scale for the prefix sums of log-derivatives
const FIXED_SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

#[inline]
pub(crate) fn to_fixed(v: f64) -> i128 {
    (v * FIXED_SCALE).round() as i128
}

#[inline]
pub(crate) fn from_fixed(v: i128) -> f64 {
    v as f64 / FIXED_SCALE
}

/// A finite forward trajectory of the skew product.
#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub theta_path: Vec<BaseState>,
    pub x_path: Vec<FiberPoint>,
    /// ln |∂ₓf| at each step (ln of the smallest singular value on the
    /// torus), clipped below at [`LOG_FLOOR`].
    pub log_deriv: Vec<f64>,
    pub bp_dist: Vec<f64>,
    pub valid: bool,
    prefix: Vec<i128>,
}

impl OrbitRecord {
    fn with_capacity(n: usize) -> Self {
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0);
        OrbitRecord {
            theta_path: Vec::with_capacity(n + 1),
            x_path: Vec::with_capacity(n + 1),
            log_deriv: Vec::with_capacity(n),
            bp_dist: Vec::with_capacity(n),
            valid: true,
            prefix,
        }
    }

    fn push_step(&mut self, ld: f64, dist: f64) {
        self.log_deriv.push(ld);
        self.bp_dist.push(dist);
        let last = *self.prefix.last().unwrap();
        self.prefix.push(last + to_fixed(ld));
        if dist <= TOL_BP {
            self.valid = false;
        }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.log_deriv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_deriv.is_empty()
    }

    /// Σ log_deriv over steps `m..n` in 2⁻⁶⁴ fixed point. Exactly additive.
    pub fn log_sum_fixed(&self, m: usize, n: usize) -> i128 {
        self.prefix[n] - self.prefix[m]
    }

    /// Σ log_deriv over steps `m..n`.
    pub fn log_sum(&self, m: usize, n: usize) -> f64 {
        from_fixed(self.log_sum_fixed(m, n))
    }

    /// Finite-time exponent (1/n) ln |Dfⁿ| over the whole record.
    pub fn exponent(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.log_sum(0, self.len()) / self.len() as f64
    }

    /// Write the record as CSV: step, theta, x (and y on the torus),
    /// log_deriv, bp_dist, valid. The final row carries the endpoint only.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let torus = matches!(self.x_path.first(), Some(FiberPoint::Torus(_)));
        if torus {
            writeln!(out, "step,theta,x,y,log_deriv,bp_dist,valid")?;
        } else {
            writeln!(out, "step,theta,x,log_deriv,bp_dist,valid")?;
        }
        for (j, (th, x)) in self.theta_path.iter().zip(&self.x_path).enumerate() {
            write!(out, "{j},{th},")?;
            match x {
                FiberPoint::Line(v) => write!(out, "{v}")?,
                FiberPoint::Torus([a, b]) => write!(out, "{a},{b}")?,
            }
            if j < self.len() {
                let d = self.bp_dist[j];
                writeln!(out, ",{},{},{}", self.log_deriv[j], d, d > TOL_BP)?;
            } else {
                writeln!(out, ",,,")?;
            }
        }
        Ok(())
    }
}

/// One fiber step: image, clipped log-derivative, breakpoint distance.
#[inline]
pub(crate) fn fiber_step(sys: &SkewSystem, map: FiberMap, x: FiberPoint) -> (FiberPoint, f64, f64) {
    match (map, x) {
        (FiberMap::Interval(f), FiberPoint::Line(v)) => {
            let d = f.deriv_right(v).abs();
            (FiberPoint::Line(f.eval(v)), d.ln().max(LOG_FLOOR), sys.breakpoint_distance(v))
        }
        (FiberMap::Torus(g), FiberPoint::Torus(p)) => {
            let (s, _) = g.singular_values(p);
            (FiberPoint::Torus(g.eval(p)), s.ln().max(LOG_FLOOR), f64::INFINITY)
        }
        _ => panic!("fiber point does not match the fiber space"),
    }
}

/// The orbit φʲ(θ, x), 0 ≤ j ≤ n.
///
/// Steps that land within the breakpoint tolerance mark the record invalid;
/// iteration continues with the right-lateral convention.
pub fn forward_orbit(sys: &SkewSystem, theta: &BaseState, x: &FiberPoint, n: usize) -> Result<OrbitRecord> {
    sys.base().check_state(theta)?;
    if !sys.contains(x) {
        return crate::error::domain(format!("fiber point {x:?} outside the fiber domain"));
    }
    let mut rec = OrbitRecord::with_capacity(n);
    let mut th = theta.clone();
    let mut xv = *x;
    for _ in 0..n {
        let (next, ld, dist) = fiber_step(sys, sys.map_at(&th), xv);
        rec.theta_path.push(th.clone());
        rec.x_path.push(xv);
        rec.push_step(ld, dist);
        th = sys.base_advance(&th);
        xv = next;
    }
    rec.theta_path.push(th);
    rec.x_path.push(xv);
    Ok(rec)
}

/// Iterate the fibers along an explicit base path `path[0], path[1], …`,
/// applying one map per entry except the last.
pub fn orbit_along(sys: &SkewSystem, path: &[BaseState], x: &FiberPoint) -> OrbitRecord {
    let n = path.len().saturating_sub(1);
    let mut rec = OrbitRecord::with_capacity(n);
    let mut xv = *x;
    for th in &path[..n] {
        let (next, ld, dist) = fiber_step(sys, sys.map_at(th), xv);
        rec.x_path.push(xv);
        rec.push_step(ld, dist);
        xv = next;
    }
    rec.theta_path.extend_from_slice(path);
    rec.x_path.push(xv);
    rec
}

/// Result of a backward composition.
#[derive(Clone, Debug)]
pub struct BackwardSample {
    pub value: FiberPoint,
    /// Log-probability of the sampled base branch; 0 for invertible bases.
    pub branch_log_weight: f64,
    /// The forward orbit from θ₋ⱼ to θ.
    pub record: OrbitRecord,
}

/// Sample θ₋₁, …, θ₋ⱼ and return f^j_{θ₋ⱼ}(x).
///
/// The fibers are iterated along the sampled branch itself, so the record
/// ends exactly at θ.
pub fn backward_composition<R: Rng + ?Sized>(
    sys: &SkewSystem,
    theta: &BaseState,
    j: usize,
    x: &FiberPoint,
    rng: &mut R,
) -> Result<BackwardSample> {
    sys.base().check_state(theta)?;
    if !sys.contains(x) {
        return crate::error::domain(format!("fiber point {x:?} outside the fiber domain"));
    }
    let mut path = Vec::with_capacity(j + 1);
    let weight = sample_branch(sys, theta, j, rng, &mut path);
    let record = orbit_along(sys, &path, x);
    Ok(BackwardSample { value: *record.x_path.last().unwrap(), branch_log_weight: weight, record })
}

/// Fill `path` with θ₋ⱼ, …, θ₋₁, θ. Returns the branch log-probability.
pub(crate) fn sample_branch<R: Rng + ?Sized>(
    sys: &SkewSystem,
    theta: &BaseState,
    j: usize,
    rng: &mut R,
    path: &mut Vec<BaseState>,
) -> f64 {
    path.clear();
    path.push(theta.clone());
    let mut weight = 0.0;
    for _ in 0..j {
        let (pre, lw) = sys.base_preimage_sample(path.last().unwrap(), rng);
        weight += lw;
        path.push(pre);
    }
    path.reverse();
    weight
}

/// Fill `maps` with the interval fiber maps along a sampled backward branch
/// of length `j` ending at θ, in the order they are applied. Uses the same
/// random draws as [`sample_branch`] without building base states for
/// shift bases.
pub(crate) fn sample_branch_maps<R: Rng + ?Sized>(
    sys: &SkewSystem,
    theta: &BaseState,
    j: usize,
    rng: &mut R,
    maps: &mut Vec<IntervalMap>,
) {
    maps.clear();
    if matches!(sys.base().kind(), BaseKind::FullShift { .. }) {
        for _ in 0..j {
            let s = sys.base().preimage_symbol(rng).unwrap();
            maps.push(sys.interval_map_for_symbol(s));
        }
    } else {
        let mut th = theta.clone();
        for _ in 0..j {
            th = sys.base_preimage_sample(&th, rng).0;
            maps.push(sys.interval_map_at(&th));
        }
    }
    maps.reverse();
}

/// Push an interval point through `maps`. Returns the endpoint and whether
/// every step kept clear of breakpoints.
#[inline]
pub(crate) fn push_interval(bps: &[f64], maps: &[IntervalMap], x: f64) -> (f64, bool) {
    let mut v = x;
    for f in maps {
        if nearest_distance(bps, v) <= TOL_BP {
            return (v, false);
        }
        v = f.eval(v);
    }
    (v, true)
}

/// Finite-time exponent (1/n) Σ log-derivative without storing the orbit.
/// Agrees bit for bit with [`OrbitRecord::exponent`]. Returns the exponent
/// and the validity flag.
pub fn finite_time_exponent(sys: &SkewSystem, theta: &BaseState, x: &FiberPoint, n: usize) -> Result<(f64, bool)> {
    sys.base().check_state(theta)?;
    if !sys.contains(x) {
        return crate::error::domain(format!("fiber point {x:?} outside the fiber domain"));
    }
    let mut th = theta.clone();
    let mut xv = *x;
    let mut acc: i128 = 0;
    let mut valid = true;
    for _ in 0..n {
        let (next, ld, dist) = fiber_step(sys, sys.map_at(&th), xv);
        acc += to_fixed(ld);
        valid &= dist > TOL_BP;
        th = sys.base_advance(&th);
        xv = next;
    }
    let e = if n == 0 { 0.0 } else { from_fixed(acc) / n as f64 };
    Ok((e, valid))
}
