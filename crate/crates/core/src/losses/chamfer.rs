//! Symmetric Chamfer distance with a uniform-grid nearest-neighbour index.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::types::{PointCloud, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChamferVariant {
    /// Mean nearest-neighbour Euclidean distance.
    #[default]
    Mean,
    /// Mean squared nearest-neighbour distance.
    Squared,
}

/// `½·(mean_a d(a, B) + mean_b d(b, A))` in meters.
pub fn chamfer(a: &PointCloud, b: &PointCloud, variant: ChamferVariant) -> Result<f64> {
    let pa: Vec<Vec3> = a.positions().collect();
    let pb: Vec<Vec3> = b.positions().collect();
    chamfer_points(&pa, &pb, variant)
}

pub fn chamfer_points(a: &[Vec3], b: &[Vec3], variant: ChamferVariant) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("chamfer distance needs two non-empty clouds".into()));
    }
    let bounds = Bounds::of(a.iter().chain(b));
    let grid_a = Grid::build(a, &bounds);
    let grid_b = Grid::build(b, &bounds);
    let directed = |queries: &[Vec3], grid: &Grid| -> f64 {
        let sum: f64 = queries
            .iter()
            .map(|&q| {
                let d2 = grid.nearest_sq(q);
                match variant {
                    ChamferVariant::Mean => math::sqrt(d2),
                    ChamferVariant::Squared => d2,
                }
            })
            .sum();
        sum / queries.len() as f64
    };
    Ok(0.5 * (directed(a, &grid_b) + directed(b, &grid_a)))
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    min: Vec3,
    max: Vec3,
}

impl Bounds {
    fn of<'a>(points: impl Iterator<Item = &'a Vec3>) -> Self {
        let mut min = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = -min;
        for p in points {
            min = Vec3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
            max = Vec3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
        }
        Self { min, max }
    }
}

/// Points bucketed into cubic cells, stored CSR-style.
struct Grid<'a> {
    points: &'a [Vec3],
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    order: Vec<usize>,
}

const MAX_CELLS_PER_AXIS: usize = 256;

impl<'a> Grid<'a> {
    fn build(points: &'a [Vec3], bounds: &Bounds) -> Self {
        let extent = bounds.max - bounds.min;
        let longest = extent.x.max(extent.y).max(extent.z);
        // about one point per cell along the longest axis
        let per_axis = (math::floor(math::cbrt(points.len() as f64)) as usize).clamp(1, MAX_CELLS_PER_AXIS);
        let cell = if longest > 0.0 { longest / per_axis as f64 } else { 1.0 };
        let axis = |e: f64| ((math::floor(e / cell) as usize) + 1).min(MAX_CELLS_PER_AXIS);
        let dims = [axis(extent.x), axis(extent.y), axis(extent.z)];
        let mut grid = Grid { points, origin: bounds.min, cell, dims, starts: Vec::new(), order: Vec::new() };

        let n_cells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; n_cells + 1];
        let cells: Vec<usize> = points.iter().map(|&p| grid.flat(grid.cell_of(p))).collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.order = order;
        grid
    }

    fn cell_of(&self, p: Vec3) -> [usize; 3] {
        let idx = |v: f64, o: f64, d: usize| {
            let i = math::floor((v - o) / self.cell);
            if i <= 0.0 { 0 } else { (i as usize).min(d - 1) }
        };
        [idx(p.x, self.origin.x, self.dims[0]), idx(p.y, self.origin.y, self.dims[1]), idx(p.z, self.origin.z, self.dims[2])]
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    fn scan_cell(&self, c: [usize; 3], q: Vec3, best: &mut f64) {
        let f = self.flat(c);
        for &i in &self.order[self.starts[f]..self.starts[f + 1]] {
            let d2 = (self.points[i] - q).norm_squared();
            if d2 < *best {
                *best = d2;
            }
        }
    }

    /// Squared distance to the nearest indexed point, searching Chebyshev
    /// shells outward until no unvisited cell can be closer.
    fn nearest_sq(&self, q: Vec3) -> f64 {
        let center = self.cell_of(q);
        let mut best = f64::INFINITY;
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        for ring in 0..=max_ring {
            let lo = |a: usize| center[a].saturating_sub(ring);
            let hi = |a: usize| (center[a] + ring).min(self.dims[a] - 1);
            for x in lo(0)..=hi(0) {
                for y in lo(1)..=hi(1) {
                    for z in lo(2)..=hi(2) {
                        let cheb = x.abs_diff(center[0]).max(y.abs_diff(center[1])).max(z.abs_diff(center[2]));
                        if cheb == ring {
                            self.scan_cell([x, y, z], q, &mut best);
                        }
                    }
                }
            }
            // any point in shell ring+1 or beyond is at least ring·cell away
            let bound = ring as f64 * self.cell;
            if best <= bound * bound {
                break;
            }
        }
        best
    }
}
