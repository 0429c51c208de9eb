//! 50 m spatial discretization: every metric and every condition cell index
//! goes through `cell_of`, so there is a single source of truth for gridding.

use serde::{Deserialize, Serialize};

use crate::data::BBox;
use crate::error::{Error, Result};

/// Square-cell grid over a lon/lat extent. The default cell size of
/// 0.00045 degrees is roughly 50 meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_lon: f64,
    pub origin_lat: f64,
    /// Cell edge length in degrees.
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

pub const DEFAULT_CELL_DEG: f64 = 0.00045;

impl GridSpec {
    /// Smallest grid anchored at the box minimum that covers the whole box.
    pub fn covering(bbox: &BBox, cell: f64) -> Result<Self> {
        if !(cell > 0.0) {
            return Err(Error::Metric(format!("cell size must be positive, got {cell}")));
        }
        bbox.validate()?;
        let nx = ((bbox.lon_max - bbox.lon_min) / cell).ceil().max(1.0) as usize;
        let ny = ((bbox.lat_max - bbox.lat_min) / cell).ceil().max(1.0) as usize;
        Ok(Self {
            origin_lon: bbox.lon_min,
            origin_lat: bbox.lat_min,
            cell,
            nx,
            ny,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Row-major cell index of a point in degrees. Points outside the extent
    /// (including the exact upper boundary) are clamped into the edge cells;
    /// the flag reports whether clamping happened.
    pub fn cell_of_checked(&self, lon: f64, lat: f64) -> (usize, bool) {
        let fx = ((lon - self.origin_lon) / self.cell).floor();
        let fy = ((lat - self.origin_lat) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        let clamped = fx != cx as f64 || fy != cy as f64;
        (cy * self.nx + cx, clamped)
    }

    /// `cell_of_checked` without the clamp flag.
    pub fn cell_of(&self, lon: f64, lat: f64) -> usize {
        self.cell_of_checked(lon, lat).0
    }

    /// (column, row) of a flat cell index.
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }
}

/// Point counts per grid cell.
#[derive(Debug, Clone)]
pub struct CellHistogram {
    counts: Vec<f64>,
    total: f64,
}

impl CellHistogram {
    pub fn new(n_cells: usize) -> Self {
        Self { counts: vec![0.0; n_cells], total: 0.0 }
    }

    pub fn add_cell(&mut self, cell: usize) {
        self.counts[cell] += 1.0;
        self.total += 1.0;
    }

    pub fn from_cells(n_cells: usize, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut h = Self::new(n_cells);
        for c in cells {
            h.add_cell(c);
        }
        h
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Normalized view; errors when the histogram is empty.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        if self.total <= 0.0 {
            return Err(Error::Metric("empty histogram has no distribution".into()));
        }
        Ok(self.counts.iter().map(|c| c / self.total).collect())
    }

    /// Cells of the `n` largest counts, zero-count cells excluded, ties broken
    /// by ascending cell index. The flag reports whether fewer than `n`
    /// nonzero cells exist (in which case all of them are returned).
    pub fn top_cells(&self, n: usize) -> (Vec<usize>, bool) {
        let mut nonzero: Vec<usize> =
            (0..self.counts.len()).filter(|&i| self.counts[i] > 0.0).collect();
        nonzero.sort_by(|&a, &b| {
            self.counts[b]
                .partial_cmp(&self.counts[a])
                .expect("counts are finite")
                .then(a.cmp(&b))
        });
        let truncated = nonzero.len() < n;
        nonzero.truncate(n);
        (nonzero, truncated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> GridSpec {
        GridSpec::covering(
            &BBox { lon_min: 0.0, lon_max: 0.0045, lat_min: 0.0, lat_max: 0.0045 },
            DEFAULT_CELL_DEG,
        )
        .unwrap()
    }

    #[test]
    fn origin_maps_to_cell_zero() {
        let g = unit_grid();
        assert_eq!(g.nx, 10);
        assert_eq!(g.ny, 10);
        assert_eq!(g.cell_of(0.0, 0.0), 0);
    }

    #[test]
    fn one_cell_east_is_cell_one() {
        let g = unit_grid();
        assert_eq!(g.cell_of(DEFAULT_CELL_DEG, 0.0), 1);
        assert_eq!(g.cell_of(0.0, DEFAULT_CELL_DEG), g.nx);
    }

    #[test]
    fn upper_boundary_clamps_into_last_cell() {
        let g = unit_grid();
        let (cell, clamped) = g.cell_of_checked(0.0045, 0.0045);
        assert_eq!(cell, g.n_cells() - 1);
        assert!(clamped);
        let (_, inside) = g.cell_of_checked(0.00449, 0.00449);
        assert!(!inside);
    }

    #[test]
    fn top_cells_break_ties_by_index() {
        let h = CellHistogram::from_cells(6, [5, 1, 3, 3, 1, 0]);
        let (top, truncated) = h.top_cells(3);
        assert_eq!(top, vec![1, 3, 0]);
        assert!(!truncated);
        let (all, truncated) = h.top_cells(10);
        assert_eq!(all, vec![1, 3, 0, 5]);
        assert!(truncated);
    }
}
