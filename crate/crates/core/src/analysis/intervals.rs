use serde::{Deserialize, Serialize};

/// A finite ordered union of disjoint open intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet::default()
    }

    /// Build from arbitrary intervals. Empty ones are dropped and
    /// overlapping ones merged; open intervals that only share an endpoint
    /// stay separate.
    pub fn from_intervals(mut v: Vec<(f64, f64)>) -> Self {
        v.retain(|(a, b)| a < b);
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a < last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.1 <= x);
        self.intervals.get(i).is_some_and(|&(a, b)| a < x && x < b)
    }

    /// Whether every interval of `self` lies inside the union `other`,
    /// allowing each endpoint to overshoot by `tol`. Adjacent intervals of
    /// `other` that share an endpoint are treated as joined.
    pub fn is_subset_of(&self, other: &IntervalSet, tol: f64) -> bool {
        let mut joined: Vec<(f64, f64)> = Vec::with_capacity(other.len());
        for &(a, b) in &other.intervals {
            match joined.last_mut() {
                Some(last) if a <= last.1 + tol => last.1 = last.1.max(b),
                _ => joined.push((a, b)),
            }
        }
        self.intervals.iter().all(|&(a, b)| {
            let i = joined.partition_point(|iv| iv.1 + tol < b);
            joined.get(i).is_some_and(|&(c, d)| c - tol <= a && b <= d + tol)
        })
    }
}
