use serde::{Deserialize, Serialize};

use super::intervals::IntervalSet;
use super::roots::solve_bracketed;
use crate::combinatorics::{monotone_partition_with_cap, DEFAULT_CELL_CAP};
use crate::error::{domain, LabError, Result};
use crate::systems::{BaseState, IntervalMap, SkewSystem, TOL_BP};

/// Pullback tolerance for window endpoints and level sets, relative to
/// the width of the bracket being solved.
pub const ROOT_TOL: f64 = 1e-12;

/// Windows (and images of windows) narrower than this many ulps are not
/// resolved well enough for a distortion estimate.
pub const MIN_WINDOW_ULPS: f64 = 4096.0;

/// A maximal interval of monotonicity of fⁱ around a point, with the
/// margins of its image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    /// Shorter of the two components of fⁱ(T) ∖ {fⁱ(x)}.
    pub r: f64,
    /// |fⁱ(T)|.
    pub image_len: f64,
}

/// The fiber maps f_θ, f_{αθ}, …, f_{α^{n−1}θ}.
pub(crate) fn maps_along(sys: &SkewSystem, theta: &BaseState, n: usize) -> Vec<IntervalMap> {
    let mut th = theta.clone();
    let mut maps = Vec::with_capacity(n);
    for _ in 0..n {
        maps.push(sys.interval_map_at(&th));
        th = sys.base_advance(&th);
    }
    maps
}

/// Index of the monotone piece containing y; a breakpoint belongs to the
/// piece on its right.
#[inline]
pub(crate) fn piece(bps: &[f64], y: f64) -> usize {
    bps.partition_point(|&b| b <= y)
}

#[inline]
pub(crate) fn compose(maps: &[IntervalMap], x: f64) -> f64 {
    maps.iter().fold(x, |v, f| f.eval_plain(v))
}

/// Image of the open piece (a, b) under f, from its lateral limits.
#[inline]
pub(crate) fn piece_image(f: &IntervalMap, a: f64, b: f64, increasing: bool) -> (f64, f64) {
    let (fa, fb) = (f.eval_plain(a), f.left_limit(b));
    if increasing {
        (fa, fb)
    } else {
        (fb, fa)
    }
}

/// Forward image data of the window around x: (image lo, image hi,
/// fⁱ(x), orientation).
pub(crate) fn image_track(maps: &[IntervalMap], bps: &[f64], dom: (f64, f64), x: f64) -> Result<(f64, f64, f64, bool)> {
    let (mut vlo, mut vhi) = dom;
    let mut y = x;
    let mut increasing = true;
    for (j, f) in maps.iter().enumerate() {
        let k = piece(bps, y);
        let left = if k > 0 { bps[k - 1] } else { f64::NEG_INFINITY };
        let right = bps.get(k).copied().unwrap_or(f64::INFINITY);
        if (y - left).abs() <= TOL_BP || (right - y).abs() <= TOL_BP {
            return Err(LabError::Degenerate(format!("orbit step {j} at {y} sits on a breakpoint")));
        }
        let d = f.deriv_right(y);
        if d == 0.0 {
            return Err(LabError::Degenerate(format!("fiber map is flat at step {j}")));
        }
        let (a, b) = (vlo.max(left), vhi.min(right));
        (vlo, vhi) = piece_image(f, a, b, d > 0.0);
        increasing ^= d < 0.0;
        y = f.eval_plain(y);
    }
    Ok((vlo, vhi, y, increasing))
}

/// Endpoints of the cylinder of x: the maximal interval whose points follow
/// the same monotone pieces as x for every map in `maps`.
fn cylinder(maps: &[IntervalMap], bps: &[f64], dom: (f64, f64), x: f64) -> (f64, f64) {
    let mut itinerary = Vec::with_capacity(maps.len());
    let mut y = x;
    for f in maps {
        itinerary.push(piece(bps, y));
        y = f.eval_plain(y);
    }
    let same = |z: f64| {
        let mut v = z;
        for (f, &k) in maps.iter().zip(&itinerary) {
            if piece(bps, v) != k {
                return false;
            }
            v = f.eval_plain(v);
        }
        true
    };
    let edge = |inside: f64, outside: f64| {
        if same(outside) {
            return outside;
        }
        let (mut i, mut o) = (inside, outside);
        // bisect down to adjacent floats: deep cylinders are far narrower
        // than any fixed tolerance
        loop {
            let m = 0.5 * (i + o);
            if m == i || m == o {
                break;
            }
            if same(m) {
                i = m;
            } else {
                o = m;
            }
        }
        0.5 * (i + o)
    };
    (edge(x, dom.0), edge(x, dom.1))
}

fn interval_domain(sys: &SkewSystem) -> Result<(f64, f64)> {
    sys.interval().map_or_else(|| domain("monotonicity windows need interval fibers"), Ok)
}

/// T_i(θ, x): the maximal interval around x on which fⁱ_θ is monotone and
/// avoids every breakpoint, with r_i and |fⁱ(T_i)|.
pub fn monotonicity_window(sys: &SkewSystem, theta: &BaseState, x: f64, i: usize) -> Result<Window> {
    let dom = interval_domain(sys)?;
    if i == 0 || !(x > dom.0 && x < dom.1) {
        return domain(format!("need i >= 1 and x inside the domain; got i={i}, x={x}"));
    }
    let maps = maps_along(sys, theta, i);
    window_on(&maps, sys.breakpoints(), dom, x)
}

pub(crate) fn window_on(maps: &[IntervalMap], bps: &[f64], dom: (f64, f64), x: f64) -> Result<Window> {
    let (vlo, vhi, y, _) = image_track(maps, bps, dom, x)?;
    let (lo, hi) = cylinder(maps, bps, dom, x);
    Ok(Window { lo, hi, r: (y - vlo).min(vhi - y).max(0.0), image_len: vhi - vlo })
}

/// The sub-window J ⊂ T_i(θ, x) mapped by fⁱ onto the ball of the given
/// radius around fⁱ(x). Requires r_i(θ, x) > radius.
pub fn koebe_window(sys: &SkewSystem, theta: &BaseState, x: f64, i: usize, radius: f64) -> Result<Window> {
    let dom = interval_domain(sys)?;
    let maps = maps_along(sys, theta, i);
    let bps = sys.breakpoints();
    let (vlo, vhi, y, increasing) = image_track(&maps, bps, dom, x)?;
    let r = (y - vlo).min(vhi - y);
    if !(radius > 0.0 && r > radius) {
        return domain(format!("koebe window needs 0 < radius < r_i = {r}"));
    }
    let (lo, hi) = cylinder(&maps, bps, dom, x);
    let g = |z: f64| compose(&maps, z);
    let (t_lo, t_hi) = if increasing { (y - radius, y + radius) } else { (y + radius, y - radius) };
    let (v_at_lo, v_at_hi) = if increasing { (vlo, vhi) } else { (vhi, vlo) };
    let jlo = solve_bracketed(g, lo, x, v_at_lo, y, t_lo, ROOT_TOL);
    let jhi = solve_bracketed(g, x, hi, y, v_at_hi, t_hi, ROOT_TOL);
    Ok(Window { lo: jlo, hi: jhi, r: radius, image_len: 2.0 * radius })
}

/// ln |Dfⁱ| along the right-lateral orbit of z (`left = false`) or along
/// the left-lateral orbit (`left = true`). Fails if the orbit passes within
/// the breakpoint tolerance at a step where that is not expected.
fn log_deriv_along(maps: &[IntervalMap], bps: &[f64], z: f64, left: bool, check: bool) -> Result<f64> {
    let mut v = z;
    let mut acc = 0.0;
    for (j, f) in maps.iter().enumerate() {
        if check && crate::systems::nearest_distance(bps, v) <= TOL_BP {
            return domain(format!("window contains a breakpoint pullback (step {j}, point {z})"));
        }
        let (dl, dr) = f.deriv(v);
        if left {
            acc += dl.abs().ln();
            v = f.left_limit(v);
        } else {
            acc += dr.abs().ln();
            v = f.eval_plain(v);
        }
    }
    Ok(acc)
}

/// max |Dfⁱ(y)| / |Dfⁱ(z)| over an evenly spaced grid on the closed
/// window. The endpoints use the one-sided limits from inside J. Fails
/// with `Degenerate` if J or any of its images spans fewer than
/// `MIN_WINDOW_ULPS` floats.
pub fn distortion_ratio(sys: &SkewSystem, theta: &BaseState, j: &Window, i: usize, grid: usize) -> Result<f64> {
    interval_domain(sys)?;
    if grid < 2 || !(j.lo <= j.hi) {
        return domain("distortion grid needs at least 2 points on an ordered window");
    }
    let maps = maps_along(sys, theta, i);
    let bps = sys.breakpoints();
    // near a critical point one step can squeeze J below the resolution of
    // its image, so every intermediate image is checked
    let unresolved = |a: f64, b: f64| (b - a).abs() < MIN_WINDOW_ULPS * f64::EPSILON * a.abs().max(b.abs());
    let (mut a, mut b) = (j.lo, j.hi);
    for (k, f) in maps.iter().enumerate() {
        if unresolved(a, b) {
            return Err(LabError::Degenerate(format!("window ({}, {}) is below floating-point resolution at step {k}", j.lo, j.hi)));
        }
        (a, b) = (f.eval_plain(a), f.left_limit(b));
    }
    if unresolved(a, b) {
        return Err(LabError::Degenerate(format!("image of window ({}, {}) is below floating-point resolution", j.lo, j.hi)));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..grid {
        let z = if k == grid - 1 { j.hi } else { j.lo + (j.hi - j.lo) * k as f64 / (grid - 1) as f64 };
        let interior = k > 0 && k < grid - 1;
        let ld = log_deriv_along(&maps, bps, z, k == grid - 1, interior)?;
        lo = lo.min(ld);
        hi = hi.max(ld);
    }
    Ok((hi - lo).exp())
}

/// ℋ_i(θ, δ) = {r_i > δ} and H_i(θ, δ) = {r_i > δ, |fⁱ(T_i)| > 3δ}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicLikeSets {
    pub delta: f64,
    pub i: usize,
    /// ℋ_i: points with r_i > δ.
    pub hcal: IntervalSet,
    /// H_i: points of ℋ_i whose window image is longer than 3δ.
    pub h: IntervalSet,
}

/// Compute ℋ_i and H_i cell by cell on the depth-i monotone partition.
/// Inside a cell the window is the cell itself, so r_i > δ exactly on the
/// preimage of (image_lo + δ, image_hi − δ). `grid` equal subdivisions of
/// each cell bracket the two level crossings before refinement.
pub fn hyperbolic_like_set(sys: &SkewSystem, theta: &BaseState, i: usize, delta: f64, grid: usize) -> Result<HyperbolicLikeSets> {
    hyperbolic_like_set_with_cap(sys, theta, i, delta, grid, DEFAULT_CELL_CAP)
}

pub fn hyperbolic_like_set_with_cap(
    sys: &SkewSystem,
    theta: &BaseState,
    i: usize,
    delta: f64,
    grid: usize,
    cell_cap: usize,
) -> Result<HyperbolicLikeSets> {
    interval_domain(sys)?;
    if !(delta > 0.0) || i == 0 {
        return domain(format!("need delta > 0 and i >= 1; got {delta}, {i}"));
    }
    let part = monotone_partition_with_cap(sys, theta, i, cell_cap)?;
    let maps = maps_along(sys, theta, i);
    let g = |z: f64| compose(&maps, z);
    let mut hcal = Vec::new();
    let mut h = Vec::new();
    for c in part.cells.iter().filter(|c| !c.degenerate) {
        let len = c.image_hi - c.image_lo;
        if len <= 2.0 * delta {
            continue;
        }
        let (a, b) = level_preimage(&g, c.lo, c.hi, c.image_lo, c.image_hi, c.increasing, c.image_lo + delta, c.image_hi - delta, grid);
        if a < b {
            hcal.push((a, b));
            if len > 3.0 * delta {
                h.push((a, b));
            }
        }
    }
    let hcal = IntervalSet::from_intervals(hcal);
    let h = IntervalSet::from_intervals(h);
    Ok(HyperbolicLikeSets { delta, i, hcal, h })
}

/// Preimage within a monotone cell of the image interval (t_lo, t_hi).
#[allow(clippy::too_many_arguments)]
pub(crate) fn level_preimage<G: Fn(f64) -> f64>(
    g: &G,
    lo: f64,
    hi: f64,
    image_lo: f64,
    image_hi: f64,
    increasing: bool,
    t_lo: f64,
    t_hi: f64,
    grid: usize,
) -> (f64, f64) {
    let (at_lo, at_hi) = if increasing { (image_lo, image_hi) } else { (image_hi, image_lo) };
    let solve = |target: f64| bracket_and_solve(g, lo, hi, at_lo, at_hi, target, grid);
    let (za, zb) = (solve(t_lo), solve(t_hi));
    if increasing {
        (za, zb)
    } else {
        (zb, za)
    }
}

pub(crate) fn bracket_and_solve<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64, at_lo: f64, at_hi: f64, target: f64, grid: usize) -> f64 {
    let (mut a, mut b, mut ga, mut gb) = (lo, hi, at_lo, at_hi);
    if grid > 1 {
        let up = at_hi > at_lo;
        for k in 1..grid {
            let z = lo + (hi - lo) * k as f64 / grid as f64;
            let gz = g(z);
            if (gz < target) == up {
                a = z;
                ga = gz;
            } else {
                b = z;
                gb = gz;
                break;
            }
        }
    }
    solve_bracketed(g, a, b, ga, gb, target, ROOT_TOL)
}
