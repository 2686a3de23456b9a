//! Empirical measures on interval fibers: the averages η_n(θ) and μ_n(θ) of
//! backward pushforwards of Lebesgue measure, forward Birkhoff measures, and
//! an invariance defect.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{piece, piece_image};
use crate::error::{domain, Result};
use crate::orbits::{push_interval, sample_branch_maps, LOG_FLOOR};
use crate::systems::{BaseState, IntervalMap, SkewSystem, TOL_BP};

/// Attempts per sample before an invalid draw is given up.
pub const MAX_REDRAWS: usize = 100;

/// Default number of burn-in steps for the exponent proxy of μ_n.
pub const DEFAULT_BURN: usize = 200;

/// Binned measure on [lo, hi] with equal-width bins. Mass may be below 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    pub weights: Vec<f64>,
    pub total_mass: f64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo < hi) || bins == 0 {
            return domain(format!("histogram needs lo < hi and bins > 0; got [{lo}, {hi}], {bins}"));
        }
        Ok(Histogram { lo, hi, bins, weights: vec![0.0; bins], total_mass: 0.0 })
    }

    /// An empty histogram over the fiber interval of `sys`.
    pub fn for_system(sys: &SkewSystem, bins: usize) -> Result<Self> {
        match sys.interval() {
            Some((lo, hi)) => Histogram::new(lo, hi, bins),
            None => domain("histograms live on interval fibers"),
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// Left edge of bin i, i.e. lo + (hi − lo)·i/bins.
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.bins as f64
    }

    #[inline]
    pub fn bin_of(&self, x: f64) -> usize {
        let t = (x - self.lo) / (self.hi - self.lo) * self.bins as f64;
        (t.max(0.0) as usize).min(self.bins - 1)
    }

    #[inline]
    pub fn deposit(&mut self, x: f64, w: f64) {
        let i = self.bin_of(x);
        self.weights[i] += w;
        self.total_mass += w;
    }

    /// Recompute total_mass from the weights.
    pub fn renormalize_total(&mut self) {
        self.total_mass = self.weights.iter().sum();
    }

    fn same_binning(&self, other: &Histogram) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.bins == other.bins
    }

    /// Bin-wise sum.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if !self.same_binning(other) {
            return domain("cannot merge histograms with different binning");
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.total_mass += other.total_mass;
        Ok(())
    }

    /// Scale all weights by `c`.
    pub fn scale(&mut self, c: f64) {
        self.weights.iter_mut().for_each(|w| *w *= c);
        self.total_mass *= c;
    }

    /// Density of the normalized measure: weight / (total_mass · width).
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total_mass * self.bin_width();
        self.weights.iter().map(|w| if norm > 0.0 { w / norm } else { 0.0 }).collect()
    }

    /// Density of the measure as is: weight / width.
    pub fn raw_density(&self) -> Vec<f64> {
        let w = self.bin_width();
        self.weights.iter().map(|v| v / w).collect()
    }

    pub fn sup_raw_density(&self) -> f64 {
        self.raw_density().into_iter().fold(0.0, f64::max)
    }

    /// L¹ distance between the normalized measures, in [0, 2].
    pub fn l1_distance(&self, other: &Histogram) -> Result<f64> {
        if !self.same_binning(other) {
            return domain("L1 distance needs identical binning");
        }
        if !(self.total_mass > 0.0 && other.total_mass > 0.0) {
            return domain("L1 distance needs positive mass on both sides");
        }
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a / self.total_mass - b / other.total_mass).abs())
            .sum())
    }

    /// L¹ distance between the normalized histogram and given bin masses.
    pub fn l1_to_masses(&self, masses: &[f64]) -> Result<f64> {
        if masses.len() != self.bins || !(self.total_mass > 0.0) {
            return domain("mass vector must match the bins of a non-empty histogram");
        }
        Ok(self.weights.iter().zip(masses).map(|(w, m)| (w / self.total_mass - m).abs()).sum())
    }

    /// Cumulative normalized weights, for inverse-CDF sampling.
    pub fn cdf(&self) -> Result<Vec<f64>> {
        if !(self.total_mass > 0.0) {
            return domain("cannot sample from an empty histogram");
        }
        let mut acc = 0.0;
        let mut c: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc / self.total_mass
            })
            .collect();
        *c.last_mut().unwrap() = 1.0;
        Ok(c)
    }

    /// Draw a point: bin by inverse CDF, then uniform inside the bin.
    #[inline]
    pub fn sample_with<R: Rng + ?Sized>(&self, cdf: &[f64], rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = cdf.partition_point(|&c| c <= u).min(self.bins - 1);
        self.edge(i) + self.bin_width() * rng.random::<f64>()
    }

    /// CSV with columns bin_lo, bin_hi, weight, density (normalized).
    pub fn to_csv(&self) -> String {
        let dens = self.density();
        let mut s = String::from("bin_lo,bin_hi,weight,density\n");
        for (i, (w, d)) in self.weights.iter().zip(&dens).enumerate() {
            let _ = writeln!(s, "{},{},{w},{d}", self.edge(i), self.edge(i + 1));
        }
        s
    }
}

/// A Monte Carlo estimate with its bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub histogram: Histogram,
    pub samples: usize,
    pub accepted: usize,
    /// Draws discarded because the orbit came within the breakpoint tolerance.
    pub invalid_redraws: usize,
    /// Samples abandoned after [`MAX_REDRAWS`] invalid attempts.
    pub invalid_dropped: usize,
}

impl MeasureEstimate {
    /// Combine estimates of the same measure made on disjoint sample sets.
    pub fn merge(parts: &[MeasureEstimate]) -> Result<MeasureEstimate> {
        let first = match parts.first() {
            Some(p) => p,
            None => return domain("nothing to merge"),
        };
        let mut total = MeasureEstimate {
            histogram: Histogram::new(first.histogram.lo, first.histogram.hi, first.histogram.bins)?,
            samples: 0,
            accepted: 0,
            invalid_redraws: 0,
            invalid_dropped: 0,
        };
        for p in parts {
            let mut h = p.histogram.clone();
            h.scale(p.samples as f64);
            total.histogram.merge(&h)?;
            total.samples += p.samples;
            total.accepted += p.accepted;
            total.invalid_redraws += p.invalid_redraws;
            total.invalid_dropped += p.invalid_dropped;
        }
        if total.samples > 0 {
            total.histogram.scale(1.0 / total.samples as f64);
        }
        Ok(total)
    }
}

fn check_counts(n: usize, samples: usize) -> Result<()> {
    if n == 0 || samples == 0 {
        return domain(format!("need n >= 1 and samples >= 1; got {n}, {samples}"));
    }
    Ok(())
}

/// Monte Carlo estimate of η_n(θ) = (1/n) Σ_{j=1}^{n} (f^j_{α^{−j}θ})_* m.
///
/// Each sample draws x uniform on the fiber, j uniform in 1..=n and a fresh
/// backward branch, and deposits f^j(x) with weight 1/samples.
pub fn eta_n_estimate<R: Rng + ?Sized>(
    sys: &SkewSystem,
    theta: &BaseState,
    n: usize,
    samples: usize,
    bins: usize,
    rng: &mut R,
) -> Result<MeasureEstimate> {
    check_counts(n, samples)?;
    sys.base().check_state(theta)?;
    let mut hist = Histogram::for_system(sys, bins)?;
    let (lo, hi) = sys.interval().unwrap();
    let bps = sys.breakpoints();
    let w = 1.0 / samples as f64;
    let mut maps = Vec::with_capacity(n);
    let (mut redraws, mut dropped) = (0, 0);
    for _ in 0..samples {
        let mut landed = None;
        for _ in 0..MAX_REDRAWS {
            let x = lo + (hi - lo) * rng.random::<f64>();
            let j = rng.random_range(1..=n);
            sample_branch_maps(sys, theta, j, rng, &mut maps);
            let (v, ok) = push_interval(bps, &maps, x);
            if ok {
                landed = Some(v);
                break;
            }
            redraws += 1;
        }
        match landed {
            Some(v) => hist.deposit(v, w),
            None => dropped += 1,
        }
    }
    hist.renormalize_total();
    Ok(MeasureEstimate { histogram: hist, samples, accepted: samples - dropped, invalid_redraws: redraws, invalid_dropped: dropped })
}

/// Parameters of the μ_n restriction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuParams {
    /// Radius δ of the hyperbolic-like set H_j(θ₋ⱼ, δ).
    pub delta: f64,
    /// Exponent level: a sample counts if its finite-time exponent exceeds 2λ.
    pub lambda: f64,
    /// Extra forward steps beyond j for the exponent proxy.
    pub burn: usize,
}

/// Monte Carlo estimate of μ_n(θ): as η_n, but a draw (j, branch, x) only
/// contributes if x ∈ H_j(θ₋ⱼ, δ) (r_j > δ and |f^j(T_j)| > 3δ) and the
/// exponent proxy (1/(j + burn)) ln |Df^{j+burn}(x)| exceeds 2λ. The proxy
/// follows the sampled branch up to θ and then the forward base orbit.
/// Total mass is the accepted fraction.
pub fn mu_n_estimate<R: Rng + ?Sized>(
    sys: &SkewSystem,
    theta: &BaseState,
    n: usize,
    params: MuParams,
    samples: usize,
    bins: usize,
    rng: &mut R,
) -> Result<MeasureEstimate> {
    check_counts(n, samples)?;
    sys.base().check_state(theta)?;
    if !(params.delta > 0.0 && params.lambda > 0.0) {
        return domain(format!("need delta > 0 and lambda > 0; got {}, {}", params.delta, params.lambda));
    }
    let mut hist = Histogram::for_system(sys, bins)?;
    let (lo, hi) = sys.interval().unwrap();
    let bps = sys.breakpoints();
    let w = 1.0 / samples as f64;
    // forward continuation of the base beyond θ, shared by all samples
    let mut ahead = Vec::with_capacity(params.burn);
    let mut th = theta.clone();
    for _ in 0..params.burn {
        ahead.push(sys.interval_map_at(&th));
        th = sys.base_advance(&th);
    }
    let mut maps = Vec::with_capacity(n);
    let (mut redraws, mut dropped, mut accepted) = (0, 0, 0);
    for _ in 0..samples {
        let mut outcome = None;
        for _ in 0..MAX_REDRAWS {
            let x = lo + (hi - lo) * rng.random::<f64>();
            let j = rng.random_range(1..=n);
            sample_branch_maps(sys, theta, j, rng, &mut maps);
            match mu_trial(bps, (lo, hi), &maps, &ahead, x, params) {
                Trial::Invalid => redraws += 1,
                t => {
                    outcome = Some(t);
                    break;
                }
            }
        }
        match outcome {
            Some(Trial::Accept(y)) => {
                hist.deposit(y, w);
                accepted += 1;
            }
            Some(_) => {}
            None => dropped += 1,
        }
    }
    hist.renormalize_total();
    Ok(MeasureEstimate { histogram: hist, samples, accepted, invalid_redraws: redraws, invalid_dropped: dropped })
}

enum Trial {
    Accept(f64),
    Reject,
    Invalid,
}

fn mu_trial(
    bps: &[f64],
    dom: (f64, f64),
    branch: &[IntervalMap],
    ahead: &[IntervalMap],
    x: f64,
    p: MuParams,
) -> Trial {
    let (mut vlo, mut vhi) = dom;
    let mut y = x;
    let mut log_sum = 0.0;
    for f in branch {
        let k = piece(bps, y);
        let left = if k > 0 { bps[k - 1] } else { f64::NEG_INFINITY };
        let right = bps.get(k).copied().unwrap_or(f64::INFINITY);
        if y - left <= TOL_BP || right - y <= TOL_BP {
            return Trial::Invalid;
        }
        let d = f.deriv_right(y);
        if d == 0.0 {
            return Trial::Reject;
        }
        (vlo, vhi) = piece_image(f, vlo.max(left), vhi.min(right), d > 0.0);
        log_sum += d.abs().ln().max(LOG_FLOOR);
        y = f.eval(y);
    }
    let r = (y - vlo).min(vhi - y);
    if !(r > p.delta && vhi - vlo > 3.0 * p.delta) {
        return Trial::Reject;
    }
    let mut z = y;
    for f in ahead {
        log_sum += f.deriv_right(z).abs().ln().max(LOG_FLOOR);
        z = f.eval(z);
    }
    if log_sum / (branch.len() + ahead.len()) as f64 > 2.0 * p.lambda {
        Trial::Accept(y)
    } else {
        Trial::Reject
    }
}

/// Empirical distribution of the forward orbit x₀, …, x_{n−1}.
pub fn birkhoff_measure(sys: &SkewSystem, theta: &BaseState, x: f64, n: usize, bins: usize) -> Result<Histogram> {
    check_counts(n, 1)?;
    sys.base().check_state(theta)?;
    let mut hist = Histogram::for_system(sys, bins)?;
    if !sys.contains(&crate::systems::FiberPoint::Line(x)) {
        return domain(format!("start point {x} outside the fiber"));
    }
    let mut th = theta.clone();
    let mut v = x;
    for _ in 0..n {
        let b = hist.bin_of(v);
        hist.weights[b] += 1.0;
        v = sys.interval_map_at(&th).eval(v);
        th = sys.base_advance(&th);
    }
    hist.scale(1.0 / n as f64);
    hist.renormalize_total();
    Ok(hist)
}

/// L¹ distance between `h` and its image after `steps` fiber steps, with
/// x drawn from `h` and θ drawn uniformly from `ensemble`.
pub fn invariance_residual<R: Rng + ?Sized>(
    sys: &SkewSystem,
    h: &Histogram,
    ensemble: &[BaseState],
    steps: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if ensemble.is_empty() || steps == 0 || samples == 0 {
        return domain("residual needs a non-empty ensemble, steps >= 1 and samples >= 1");
    }
    let cdf = h.cdf()?;
    let mut out = Histogram::new(h.lo, h.hi, h.bins)?;
    let w = 1.0 / samples as f64;
    for _ in 0..samples {
        let mut v = h.sample_with(&cdf, rng);
        let mut th = ensemble[rng.random_range(0..ensemble.len())].clone();
        for _ in 0..steps {
            v = sys.interval_map_at(&th).eval(v);
            th = sys.base_advance(&th);
        }
        out.deposit(v, w);
    }
    h.l1_distance(&out)
}
