use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Slack used when comparing partial sums.
const PLISS_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlissReport {
    /// Pliss times, 1-based and increasing.
    pub indices: Vec<usize>,
    pub density: f64,
    /// Guaranteed density (c₂ − c₁)/(A − c₁).
    pub xi: f64,
    /// Whether Σ aⱼ ≥ c₂N held, in which case density ≥ ξ.
    pub hypothesis_holds: bool,
}

fn check(a: &[f64], big_a: f64, c1: f64, c2: f64) -> Result<f64> {
    if !(c1 > 0.0 && c2 > c1 && big_a >= c2) {
        return domain(format!("Pliss parameters need A >= c2 > c1 > 0, got A={big_a}, c2={c2}, c1={c1}"));
    }
    if let Some((j, v)) = a.iter().enumerate().find(|(_, &v)| !(v <= big_a + PLISS_TOL)) {
        return domain(format!("a[{j}] = {v} exceeds A = {big_a}"));
    }
    Ok((c2 - c1) / (big_a - c1))
}

fn report(indices: Vec<usize>, a: &[f64], c2: f64, xi: f64) -> PlissReport {
    let n = a.len();
    let density = if n == 0 { 0.0 } else { indices.len() as f64 / n as f64 };
    let hypothesis_holds = n > 0 && a.iter().sum::<f64>() >= c2 * n as f64;
    PlissReport { indices, density, xi, hypothesis_holds }
}

/// Times nᵢ ∈ {1,…,N} with Σ_{j=n+1}^{nᵢ} aⱼ ≥ c₁(nᵢ − n) for every 0 ≤ n < nᵢ.
///
/// Exhaustive scan over all pairs of prefix sums.
pub fn pliss_times(a: &[f64], big_a: f64, c1: f64, c2: f64) -> Result<PlissReport> {
    let xi = check(a, big_a, c1, c2)?;
    let mut prefix = Vec::with_capacity(a.len() + 1);
    prefix.push(0.0);
    for v in a {
        prefix.push(prefix.last().unwrap() + v);
    }
    let indices = (1..=a.len())
        .filter(|&m| (0..m).all(|n| prefix[m] - prefix[n] >= c1 * (m - n) as f64 - PLISS_TOL))
        .collect();
    Ok(report(indices, a, c2, xi))
}

/// Same as [`pliss_times`] in linear time: m is a Pliss time exactly when
/// Sₘ − c₁m is at least every earlier value of Sₙ − c₁n.
pub fn pliss_times_linear(a: &[f64], big_a: f64, c1: f64, c2: f64) -> Result<PlissReport> {
    let xi = check(a, big_a, c1, c2)?;
    let mut indices = Vec::new();
    let mut s = 0.0;
    let mut best = 0.0f64;
    for (j, v) in a.iter().enumerate() {
        s += v;
        let m = j + 1;
        let g = s - c1 * m as f64;
        if g >= best - PLISS_TOL {
            indices.push(m);
        }
        best = best.max(g);
    }
    Ok(report(indices, a, c2, xi))
}
