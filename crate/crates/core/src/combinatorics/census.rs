use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::partition::{partition_levels, MonotonePartition, DEFAULT_CELL_CAP};
use crate::analysis::{bracket_and_solve, compose, maps_along};
use crate::error::{domain, Result};
use crate::systems::{nearest_distance, BaseState, IntervalMap, SkewSystem};

/// One maximal interval on which the word (a₁, …, aₙ) is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusComponent {
    pub word: String,
    pub lo: f64,
    pub hi: f64,
}

/// Component counts #C_δ(a₁, …, aₙ) for every word that occurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCensus {
    pub delta: f64,
    pub depth: usize,
    pub p: usize,
    /// Word as a string of '0'/'1' (a₁ first) ↦ number of components.
    pub counts: BTreeMap<String, usize>,
    /// Σ counts over words with fewer than δn ones.
    pub totals: usize,
    pub components: Vec<CensusComponent>,
    /// Total length of the counted components.
    pub covered_length: f64,
}

impl ComponentCensus {
    pub fn count(&self, word: &str) -> usize {
        self.counts.get(word).copied().unwrap_or(0)
    }

    /// CSV with columns word, count.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,count\n");
        for (w, c) in &self.counts {
            s.push_str(&format!("{w},{c}\n"));
        }
        s
    }
}

/// Census of the sets C_δ(a₁, …, aₙ): aᵢ = 1 where rᵢ ≥ δ and aᵢ = 0 where
/// 0 < rᵢ < δ. Components are counted inside each depth-n monotone cell;
/// flat cells are skipped.
pub fn component_census(sys: &SkewSystem, theta: &BaseState, n: usize, delta: f64) -> Result<ComponentCensus> {
    let levels = partition_levels(sys, theta, n, DEFAULT_CELL_CAP)?;
    let maps = maps_along(sys, theta, n);
    census_on_levels(sys, &maps, &levels, n, delta)
}

/// Censuses at every depth 1, …, n, sharing one partition computation.
pub fn census_sweep(sys: &SkewSystem, theta: &BaseState, n: usize, delta: f64) -> Result<Vec<ComponentCensus>> {
    let levels = partition_levels(sys, theta, n, DEFAULT_CELL_CAP)?;
    let maps = maps_along(sys, theta, n);
    (1..=n).map(|d| census_on_levels(sys, &maps, &levels, d, delta)).collect()
}

fn census_on_levels(
    sys: &SkewSystem,
    maps: &[IntervalMap],
    levels: &[MonotonePartition],
    n: usize,
    delta: f64,
) -> Result<ComponentCensus> {
    if !(delta > 0.0) {
        return domain(format!("census needs delta > 0, got {delta}"));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut components = Vec::new();
    let mut covered = 0.0;
    let mut anc = vec![0usize; n + 1];
    for (ci, c) in levels[n].cells.iter().enumerate() {
        if c.degenerate {
            continue;
        }
        anc[n] = ci;
        for i in (1..n).rev() {
            anc[i] = levels[i + 1].cells[anc[i + 1]].parent;
        }
        let mut cuts = vec![c.lo, c.hi];
        for i in 1..=n {
            let a = &levels[i].cells[anc[i]];
            if a.image_hi - a.image_lo <= 2.0 * delta {
                continue;
            }
            let (alo, ahi) = a.end_values();
            let g_lo = if c.lo == a.lo { alo } else { compose(&maps[..i], c.lo) };
            let g_hi = if c.hi == a.hi { ahi } else { compose(&maps[..i], c.hi) };
            let (mn, mx) = (g_lo.min(g_hi), g_lo.max(g_hi));
            let g = |z: f64| compose(&maps[..i], z);
            for t in [a.image_lo + delta, a.image_hi - delta] {
                if t > mn && t < mx {
                    cuts.push(bracket_and_solve(&g, c.lo, c.hi, g_lo, g_hi, t, 1));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut current: Option<CensusComponent> = None;
        for w in cuts.windows(2) {
            if !(w[1] > w[0]) {
                continue;
            }
            let word = classify(maps, levels, &anc, n, 0.5 * (w[0] + w[1]), delta);
            match current.as_mut() {
                Some(cur) if cur.word == word => cur.hi = w[1],
                _ => {
                    if let Some(done) = current.take() {
                        components.push(done);
                    }
                    current = Some(CensusComponent { word, lo: w[0], hi: w[1] });
                }
            }
        }
        components.extend(current);
    }
    for comp in &components {
        *counts.entry(comp.word.clone()).or_default() += 1;
        covered += comp.hi - comp.lo;
    }
    let totals = counts
        .iter()
        .filter(|(w, _)| (w.bytes().filter(|&b| b == b'1').count() as f64) < delta * n as f64)
        .map(|(_, c)| c)
        .sum();
    Ok(ComponentCensus { delta, depth: n, p: sys.p(), counts, totals, components, covered_length: covered })
}

fn classify(maps: &[IntervalMap], levels: &[MonotonePartition], anc: &[usize], n: usize, x: f64, delta: f64) -> String {
    let mut word = String::with_capacity(n);
    let mut y = x;
    for i in 1..=n {
        y = maps[i - 1].eval_plain(y);
        let a = &levels[i].cells[anc[i]];
        let r = (y - a.image_lo).min(a.image_hi - y);
        word.push(if r >= delta { '1' } else { '0' });
    }
    word
}

/// Outcome of the branch-bound check between depths s and s + 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub s: usize,
    pub p: usize,
    /// The factor 3(p + 1).
    pub factor: usize,
    pub words_checked: usize,
    pub all_hold: bool,
    /// (w, #C(w0) + #C(w1), #C(w)) for every failing word.
    pub violations: Vec<(String, usize, usize)>,
    /// Σ #C over depth-(s+1) words with fewer than δ(s+1) ones.
    pub totals: usize,
    /// exp((s + 1)λ/2).
    pub bound: f64,
    pub ratio: f64,
}

/// Check #C(w0) + #C(w1) ≤ 3(p+1)·#C(w) for every depth-s word w, and report
/// the depth-(s+1) total against exp((s+1)λ/2).
pub fn verify_counting_bounds(census_s: &ComponentCensus, census_s1: &ComponentCensus, lambda: f64) -> Result<CountingReport> {
    if census_s1.depth != census_s.depth + 1 || census_s.delta != census_s1.delta || census_s.p != census_s1.p {
        return domain(format!(
            "censuses must have depths s and s+1 with the same delta; got {} and {}",
            census_s.depth, census_s1.depth
        ));
    }
    let factor = 3 * (census_s.p + 1);
    let mut children: BTreeMap<&str, usize> = BTreeMap::new();
    for (w, c) in &census_s1.counts {
        *children.entry(&w[..census_s.depth]).or_default() += c;
    }
    let mut words: Vec<&str> = census_s.counts.keys().map(String::as_str).collect();
    words.extend(children.keys().copied());
    words.sort_unstable();
    words.dedup();
    let mut violations = Vec::new();
    for w in &words {
        let lhs = children.get(w).copied().unwrap_or(0);
        let parent = census_s.count(w);
        if lhs > factor * parent {
            violations.push((w.to_string(), lhs, parent));
        }
    }
    let bound = ((census_s1.depth as f64) * lambda / 2.0).exp();
    Ok(CountingReport {
        s: census_s.depth,
        p: census_s.p,
        factor,
        words_checked: words.len(),
        all_hold: violations.is_empty(),
        violations,
        totals: census_s1.totals,
        bound,
        ratio: census_s1.totals as f64 / bound,
    })
}

/// For each census component, the steps j < n at which the orbit of its
/// midpoint comes within ε of a breakpoint (the K_{n,ε} index set).
pub fn tag_visits(sys: &SkewSystem, theta: &BaseState, census: &ComponentCensus, eps: f64) -> Vec<Vec<usize>> {
    let maps = maps_along(sys, theta, census.depth);
    let bps = sys.breakpoints();
    census
        .components
        .iter()
        .map(|c| {
            let mut y = 0.5 * (c.lo + c.hi);
            let mut steps = Vec::new();
            for (j, f) in maps.iter().enumerate() {
                if nearest_distance(bps, y) < eps {
                    steps.push(j);
                }
                y = f.eval_plain(y);
            }
            steps
        })
        .collect()
}

/// Checks |fᵏ(J)| ≤ Γᵏ|J| for k ≤ l on every component J with |J| ≤ 2δ'.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeBoundReport {
    pub checked: usize,
    pub holds: bool,
    /// Largest observed |fᵏ(J)| / (Γᵏ|J|).
    pub worst_ratio: f64,
}

pub fn check_size_bound(sys: &SkewSystem, theta: &BaseState, census: &ComponentCensus, half_width: f64, l: usize) -> SizeBoundReport {
    let steps = l.min(census.depth);
    let maps = maps_along(sys, theta, steps);
    let gamma = sys.gamma();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for c in census.components.iter().filter(|c| c.hi - c.lo <= 2.0 * half_width) {
        checked += 1;
        let (mut a, mut b) = (c.lo, c.hi);
        let mut scale = c.hi - c.lo;
        for f in &maps {
            a = f.eval_plain(a);
            b = f.left_limit(b);
            scale *= gamma;
            worst = worst.max((b - a).abs() / scale);
        }
    }
    SizeBoundReport { checked, holds: worst <= 1.0 + 1e-9, worst_ratio: worst }
}

/// Which explicit inequality groups of the parameter cascade hold for the
/// chosen (l, γ, δ). The terms ψ₁, ψ₃ have no closed form and are left out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub l_ok: bool,
    pub gamma_ok: bool,
    pub delta_ok: bool,
}

pub fn choice_cascade(lambda: f64, p: usize, l: usize, gamma: f64, delta: f64) -> CascadeReport {
    let cap = lambda / 14.0;
    let log2l = (2.0 * l as f64).ln();
    let log3p = (3.0 * (p as f64 + 1.0)).ln();
    CascadeReport {
        l_ok: l > 0 && 2.0 / l as f64 * log2l < cap,
        gamma_ok: 2.0 * gamma * log2l < cap && 3.0 * gamma * log3p < cap,
        delta_ok: 2.0 * delta * log2l < cap && 3.0 * delta * log3p < cap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{BaseSystem, FiberFamily};

    fn doubling() -> SkewSystem {
        SkewSystem::new(BaseSystem::rotation(0.3).unwrap(), FiberFamily::ExpandingInterval { k: 2 }).unwrap()
    }

    #[test]
    fn doubling_depth_one() {
        let c = component_census(&doubling(), &BaseState::circle(0.0), 1, 0.3).unwrap();
        assert_eq!(c.count("1"), 2);
        assert_eq!(c.count("0"), 4);
        assert!((c.covered_length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_delta_gives_all_zero_word() {
        let c = component_census(&doubling(), &BaseState::circle(0.0), 4, 0.6).unwrap();
        assert_eq!(c.counts.len(), 1);
        assert_eq!(c.count("0000"), 16);
    }

    #[test]
    fn branch_bound_on_doubling() {
        let sweep = census_sweep(&doubling(), &BaseState::circle(0.0), 6, 0.3).unwrap();
        for w in sweep.windows(2) {
            let r = verify_counting_bounds(&w[0], &w[1], 0.5).unwrap();
            assert!(r.all_hold, "{:?}", r.violations);
        }
        assert!(verify_counting_bounds(&sweep[0], &sweep[2], 0.5).is_err());
    }

    #[test]
    fn size_bound_and_tags() {
        let sys = doubling();
        let th = BaseState::circle(0.0);
        let c = component_census(&sys, &th, 5, 0.2).unwrap();
        let r = check_size_bound(&sys, &th, &c, 0.05, 5);
        assert!(r.checked > 0 && r.holds);
        let tags = tag_visits(&sys, &th, &c, 0.01);
        assert_eq!(tags.len(), c.components.len());
    }

    #[test]
    fn cascade_inequalities() {
        let r = choice_cascade(1.0, 1, 2000, 1e-4, 1e-4);
        assert!(r.l_ok && r.gamma_ok && r.delta_ok);
        let r = choice_cascade(1.0, 1, 10, 0.1, 0.1);
        assert!(!r.l_ok && !r.gamma_ok && !r.delta_ok);
    }
}
