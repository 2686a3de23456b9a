use crate::error::{LabError, Result};
use crate::orbits::OrbitRecord;

/// dist(x, C) if it is below δ, else 1. An empty C counts as far away.
pub fn truncated_distance(x: f64, breakpoints: &[f64], delta: f64) -> f64 {
    let d = breakpoints.iter().fold(f64::INFINITY, |m, &c| m.min((x - c).abs()));
    truncate(d, delta)
}

#[inline]
fn truncate(d: f64, delta: f64) -> f64 {
    if d >= delta {
        1.0
    } else {
        d
    }
}

/// (σ, δ, b)-hyperbolic times n ∈ {1, …, len} of an orbit record:
///
/// * Σ_{j=n−k}^{n−1} ln |Df⁻¹|ⱼ ≤ k ln σ for k = 1, …, n, and
/// * dist_δ(x_k) ≥ e^{−bk} for k = 0, …, n − 1.
///
/// |Df⁻¹| at step j is exp(−log_deriv[j]).
pub fn hyperbolic_times(record: &OrbitRecord, sigma: f64, delta: f64, b: f64) -> Result<Vec<usize>> {
    if !record.valid {
        return Err(LabError::Degenerate("orbit record hits the breakpoint set".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0) || !(delta > 0.0) || !(b >= 0.0) {
        return crate::error::domain(format!("need 0 < sigma < 1, delta > 0, b >= 0; got {sigma}, {delta}, {b}"));
    }
    let ln_sigma = sigma.ln();
    let mut out = Vec::new();
    // worst suffix sum of (−log_deriv − ln σ) ending at the current step
    let mut worst = f64::NEG_INFINITY;
    let mut recurrence_ok = true;
    for (k, (&ld, &dist)) in record.log_deriv.iter().zip(&record.bp_dist).enumerate() {
        recurrence_ok &= truncate(dist, delta) >= (-b * k as f64).exp();
        if !recurrence_ok {
            break;
        }
        worst = (-ld - ln_sigma) + worst.max(0.0);
        if worst <= 1e-10 {
            out.push(k + 1);
        }
    }
    Ok(out)
}
