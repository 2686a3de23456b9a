use serde::{Deserialize, Serialize};

use crate::analysis::{bracket_and_solve, compose, maps_along, piece_image};
use crate::error::{domain, LabError, Result};
use crate::systems::{BaseState, IntervalMap, SkewSystem};

/// Default cap on the number of cells of a partition.
pub const DEFAULT_CELL_CAP: usize = 1_000_000;

/// An open interval on which fⁿ is monotone and continuous.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    /// fⁿ(cell), from one-sided limits at the ends.
    pub image_lo: f64,
    pub image_hi: f64,
    pub increasing: bool,
    /// fⁿ is constant on the cell (a flat branch); such cells are not refined.
    pub degenerate: bool,
    /// Index of the enclosing cell one level up.
    pub parent: usize,
}

impl Cell {
    /// One-sided values of fⁿ at (lo⁺, hi⁻).
    pub fn end_values(&self) -> (f64, f64) {
        if self.increasing {
            (self.image_lo, self.image_hi)
        } else {
            (self.image_hi, self.image_lo)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonePartition {
    pub depth: usize,
    pub cells: Vec<Cell>,
    /// Interior cell endpoints, ascending.
    pub cut_points: Vec<f64>,
}

impl MonotonePartition {
    fn root(lo: f64, hi: f64) -> Self {
        let cell = Cell { lo, hi, image_lo: lo, image_hi: hi, increasing: true, degenerate: false, parent: 0 };
        MonotonePartition { depth: 0, cells: vec![cell], cut_points: Vec::new() }
    }

    /// Index of the cell containing x (cells are half-open on the right
    /// for lookup purposes).
    pub fn locate(&self, x: f64) -> Option<usize> {
        let i = self.cells.partition_point(|c| c.hi <= x);
        (i < self.cells.len() && self.cells[i].lo <= x).then_some(i)
    }
}

/// Cells of fⁿ_θ: maximal intervals on which every fʲ_θ, j ≤ n, avoids the
/// breakpoints.
pub fn monotone_partition(sys: &SkewSystem, theta: &BaseState, n: usize) -> Result<MonotonePartition> {
    monotone_partition_with_cap(sys, theta, n, DEFAULT_CELL_CAP)
}

pub fn monotone_partition_with_cap(sys: &SkewSystem, theta: &BaseState, n: usize, cell_cap: usize) -> Result<MonotonePartition> {
    let mut levels = build(sys, theta, n, cell_cap, false)?;
    Ok(levels.pop().unwrap())
}

/// Partitions at every depth 0, 1, …, n. Cell `parent` fields index into
/// the previous level.
pub fn partition_levels(sys: &SkewSystem, theta: &BaseState, n: usize, cell_cap: usize) -> Result<Vec<MonotonePartition>> {
    build(sys, theta, n, cell_cap, true)
}

fn build(sys: &SkewSystem, theta: &BaseState, n: usize, cell_cap: usize, keep: bool) -> Result<Vec<MonotonePartition>> {
    let (lo, hi) = match sys.interval() {
        Some(d) => d,
        None => return domain("monotone partitions need interval fibers"),
    };
    if n == 0 {
        return domain("partition depth must be at least 1");
    }
    let maps = maps_along(sys, theta, n);
    let bps = sys.breakpoints();
    let mut levels = vec![MonotonePartition::root(lo, hi)];
    for j in 0..n {
        let prev = levels.last().unwrap();
        let cells = refine(&prev.cells, &maps[..j], &maps[j], bps, cell_cap)?;
        let cut_points = cells.iter().skip(1).map(|c| c.lo).collect();
        let next = MonotonePartition { depth: j + 1, cells, cut_points };
        if keep {
            levels.push(next);
        } else {
            levels[0] = next;
        }
    }
    Ok(levels)
}

/// Split every cell at the pullbacks of the breakpoints of `f` lying inside
/// its image, then push the pieces through `f`.
fn refine(prev: &[Cell], before: &[IntervalMap], f: &IntervalMap, bps: &[f64], cell_cap: usize) -> Result<Vec<Cell>> {
    let g = |z: f64| compose(before, z);
    let mut out: Vec<Cell> = Vec::with_capacity(prev.len() * 2);
    for (pi, c) in prev.iter().enumerate() {
        if c.degenerate {
            out.push(Cell { parent: pi, ..*c });
            continue;
        }
        let (at_lo, at_hi) = c.end_values();
        // image-space pieces, listed along x
        let inner: Vec<f64> = bps.iter().copied().filter(|&b| b > c.image_lo && b < c.image_hi).collect();
        let mut edges_img = Vec::with_capacity(inner.len() + 2);
        edges_img.push(at_lo);
        if c.increasing {
            edges_img.extend(inner.iter().copied());
        } else {
            edges_img.extend(inner.iter().rev().copied());
        }
        edges_img.push(at_hi);
        let mut edges_x = Vec::with_capacity(edges_img.len());
        edges_x.push(c.lo);
        for &t in &edges_img[1..edges_img.len() - 1] {
            edges_x.push(bracket_and_solve(&g, c.lo, c.hi, at_lo, at_hi, t, 1));
        }
        edges_x.push(c.hi);
        for k in 0..edges_img.len() - 1 {
            let (u, v) = if c.increasing { (edges_img[k], edges_img[k + 1]) } else { (edges_img[k + 1], edges_img[k]) };
            let mid = 0.5 * (u + v);
            let d = f.deriv_right(mid);
            let (ilo, ihi) = piece_image(f, u, v, d > 0.0);
            out.push(Cell {
                lo: edges_x[k],
                hi: edges_x[k + 1],
                image_lo: ilo,
                image_hi: ihi,
                increasing: c.increasing == (d > 0.0),
                degenerate: d == 0.0 || !(ihi > ilo),
                parent: pi,
            });
        }
        if out.len() > cell_cap {
            return Err(LabError::Resource(format!("monotone partition exceeds {cell_cap} cells")));
        }
    }
    Ok(out)
}
