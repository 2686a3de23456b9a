//! Empirical ergodic decomposition: cluster Birkhoff measures of an ensemble
//! under normalized L¹ distance and report the cluster (basin) masses.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measures::Histogram;

/// Default clustering threshold in normalized L¹.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub cluster_count: usize,
    /// Normalized mean histogram of each cluster.
    pub representatives: Vec<Histogram>,
    /// Fraction of the ensemble in each cluster.
    pub basin_masses: Vec<f64>,
    /// Fraction of the ensemble with no usable measure (zero mass).
    pub unassigned_mass: f64,
    /// Smallest L¹ distance between two representatives, +∞ for fewer than two.
    pub pairwise_min_distance: f64,
    /// Cluster index per input, `None` for unassigned inputs.
    pub assignment: Vec<Option<usize>>,
}

fn normalized(h: &Histogram) -> Histogram {
    let mut g = h.clone();
    g.scale(1.0 / h.total_mass);
    g.renormalize_total();
    g
}

fn mean_of(members: &[&Histogram]) -> Histogram {
    let mut acc = normalized(members[0]);
    for h in &members[1..] {
        acc.merge(&normalized(h)).expect("binning checked on entry");
    }
    acc.scale(1.0 / members.len() as f64);
    acc.renormalize_total();
    acc
}

fn l1(a: &Histogram, b: &Histogram) -> f64 {
    a.l1_distance(b).expect("binning checked on entry")
}

/// Greedy clustering: each measure joins the first representative within
/// `threshold`, otherwise founds a new cluster. Representatives are then
/// replaced by cluster means, every measure is reassigned once to its
/// nearest mean, and clusters whose means are within `threshold` are merged.
pub fn cluster_components(measures: &[Histogram], threshold: f64) -> Result<ClusterReport> {
    if measures.is_empty() {
        return domain("cannot cluster an empty ensemble");
    }
    if !(threshold > 0.0 && threshold < 2.0) {
        return domain(format!("threshold must lie in (0, 2); got {threshold}"));
    }
    let first = &measures[0];
    if measures.iter().any(|h| h.lo != first.lo || h.hi != first.hi || h.bins != first.bins) {
        return domain("all measures must share one binning");
    }
    let usable: Vec<usize> = (0..measures.len()).filter(|&i| measures[i].total_mass > 0.0).collect();
    let n = measures.len() as f64;
    let mut assignment = vec![None; measures.len()];

    // greedy pass
    let mut reps: Vec<Histogram> = Vec::new();
    for &i in &usable {
        let h = normalized(&measures[i]);
        match reps.iter().position(|r| l1(r, &h) <= threshold) {
            Some(c) => assignment[i] = Some(c),
            None => {
                assignment[i] = Some(reps.len());
                reps.push(h);
            }
        }
    }

    // refinement: means, one reassignment, merge close means
    let mut reps = means(measures, &mut assignment, reps.len());
    for &i in &usable {
        let h = normalized(&measures[i]);
        let best = (0..reps.len())
            .map(|c| (c, l1(&reps[c], &h)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c);
        assignment[i] = best;
    }
    reps = means(measures, &mut assignment, reps.len());
    loop {
        let mut pair = None;
        'outer: for a in 0..reps.len() {
            for b in a + 1..reps.len() {
                if l1(&reps[a], &reps[b]) <= threshold {
                    pair = Some((a, b));
                    break 'outer;
                }
            }
        }
        let Some((a, b)) = pair else { break };
        for c in assignment.iter_mut().flatten() {
            if *c == b {
                *c = a;
            } else if *c > b {
                *c -= 1;
            }
        }
        reps = means(measures, &mut assignment, reps.len() - 1);
    }

    let mut basin_masses = vec![0.0; reps.len()];
    for c in assignment.iter().flatten() {
        basin_masses[*c] += 1.0 / n;
    }
    let unassigned_mass = (measures.len() - usable.len()) as f64 / n;
    let mut pairwise_min_distance = f64::INFINITY;
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            pairwise_min_distance = pairwise_min_distance.min(l1(&reps[a], &reps[b]));
        }
    }
    Ok(ClusterReport {
        cluster_count: reps.len(),
        representatives: reps,
        basin_masses,
        unassigned_mass,
        pairwise_min_distance,
        assignment,
    })
}

// Cluster means; clusters left empty by reassignment are dropped and the
// assignment is renumbered.
fn means(measures: &[Histogram], assignment: &mut [Option<usize>], k: usize) -> Vec<Histogram> {
    let mut members: Vec<Vec<&Histogram>> = vec![Vec::new(); k];
    for (h, c) in measures.iter().zip(assignment.iter()) {
        if let Some(c) = c {
            members[*c].push(h);
        }
    }
    let mut renumber = vec![None; k];
    let mut out = Vec::new();
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() {
            renumber[c] = Some(out.len());
            out.push(mean_of(m));
        }
    }
    for c in assignment.iter_mut() {
        *c = c.and_then(|c| renumber[c]);
    }
    out
}

/// Per-cluster masses and their minimum.
pub fn basin_masses(report: &ClusterReport) -> Result<(f64, Vec<f64>)> {
    if report.cluster_count == 0 {
        return domain("report has no clusters");
    }
    let min = report.basin_masses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min, report.basin_masses.clone()))
}
