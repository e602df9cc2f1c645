//! Uniform cell-centred grids.
//!
//! Three layouts are supported: the periodic unit interval `[0, 1]`, the
//! truncated interval `[-L, L]` with zero-flux walls, and the square box
//! `[-L, L]²` with zero-flux walls. Cells of the box are stored x-fastest,
//! `index = i + n·j`.
//!
//! Every integral in the crate is the midpoint rule `Σ values_i · vol`, which
//! is exact for cell-wise constants.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Periodic1D,
    Truncated1D,
    Tensor2D,
}

impl GridKind {
    pub fn dim(self) -> usize {
        match self {
            GridKind::Periodic1D | GridKind::Truncated1D => 1,
            GridKind::Tensor2D => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Periodic1D => "periodic1d",
            GridKind::Truncated1D => "truncated1d",
            GridKind::Tensor2D => "tensor2d",
        }
    }
}

/// An interior (or periodic wrap-around) face between two cells.
///
/// `lower` precedes `upper` along `axis`; for the periodic wrap face
/// `lower = n - 1` and `upper = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub lower: usize,
    pub upper: usize,
    pub axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    kind: GridKind,
    n: usize,
    lo: f64,
    h: f64,
    axis: Vec<f64>,
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    /// Builds a grid with `n_cells` cells per axis. `half_width` is required
    /// for the truncated layouts and rejected for the periodic one.
    pub fn new(kind: GridKind, n_cells: usize, half_width: Option<f64>) -> Result<Self> {
        if n_cells < Self::MIN_CELLS {
            return Err(Error::Config(format!(
                "n_cells must be at least {}, got {n_cells}",
                Self::MIN_CELLS
            )));
        }
        let (lo, len) = match (kind, half_width) {
            (GridKind::Periodic1D, None) => (0.0, 1.0),
            (GridKind::Periodic1D, Some(_)) => {
                return Err(Error::Config(
                    "half-width is not allowed for the periodic unit interval".into(),
                ))
            }
            (_, None) => {
                return Err(Error::Config(format!(
                    "half-width is required for {}",
                    kind.name()
                )))
            }
            (_, Some(l)) if !(l > 0.0) || !l.is_finite() => {
                return Err(Error::Config(format!("half-width must be positive, got {l}")))
            }
            (_, Some(l)) => (-l, 2.0 * l),
        };
        let h = len / n_cells as f64;
        let axis = (0..n_cells).map(|i| lo + (i as f64 + 0.5) * h).collect();
        Ok(Self { kind, n: n_cells, lo, h, axis })
    }

    pub fn periodic(n_cells: usize) -> Result<Self> {
        Self::new(GridKind::Periodic1D, n_cells, None)
    }

    pub fn truncated(n_cells: usize, half_width: f64) -> Result<Self> {
        Self::new(GridKind::Truncated1D, n_cells, Some(half_width))
    }

    pub fn tensor(n_cells: usize, half_width: f64) -> Result<Self> {
        Self::new(GridKind::Tensor2D, n_cells, Some(half_width))
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Cells per axis.
    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn n_cells(&self) -> usize {
        match self.kind {
            GridKind::Tensor2D => self.n * self.n,
            _ => self.n,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Left end of each axis.
    pub fn lower_bound(&self) -> f64 {
        self.lo
    }

    /// Half-width `L` of the truncated layouts; `None` for the periodic interval.
    pub fn half_width(&self) -> Option<f64> {
        match self.kind {
            GridKind::Periodic1D => None,
            _ => Some(-self.lo),
        }
    }

    pub fn axis_length(&self) -> f64 {
        self.h * self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        match self.kind {
            GridKind::Tensor2D => self.h * self.h,
            _ => self.h,
        }
    }

    pub fn domain_volume(&self) -> f64 {
        match self.kind {
            GridKind::Tensor2D => self.axis_length() * self.axis_length(),
            _ => self.axis_length(),
        }
    }

    /// Cell-centre coordinates along one axis.
    pub fn axis_centers(&self) -> &[f64] {
        &self.axis
    }

    /// Centre of cell `i`; the second coordinate is 0 on 1-D grids.
    pub fn center(&self, i: usize) -> [f64; 2] {
        match self.kind {
            GridKind::Tensor2D => [self.axis[i % self.n], self.axis[i / self.n]],
            _ => [self.axis[i], 0.0],
        }
    }

    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.n_cells()).map(|i| self.center(i)).collect()
    }

    /// Euclidean distance of cell `i`'s centre from the origin.
    pub fn radius(&self, i: usize) -> f64 {
        let [x, y] = self.center(i);
        crate::math::sqrt(x * x + y * y)
    }

    /// Every face that carries flux. Zero-flux walls are not listed.
    pub fn faces(&self) -> Faces<'_> {
        Faces { grid: self, next: 0 }
    }

    pub fn n_faces(&self) -> usize {
        match self.kind {
            GridKind::Periodic1D => self.n,
            GridKind::Truncated1D => self.n - 1,
            GridKind::Tensor2D => 2 * self.n * (self.n - 1),
        }
    }

    fn face_at(&self, k: usize) -> Face {
        let n = self.n;
        match self.kind {
            GridKind::Periodic1D => Face { lower: k, upper: (k + 1) % n, axis: 0 },
            GridKind::Truncated1D => Face { lower: k, upper: k + 1, axis: 0 },
            GridKind::Tensor2D => {
                let per_axis = n * (n - 1);
                if k < per_axis {
                    // x-faces: row j, column i → (i, i+1)
                    let (j, i) = (k / (n - 1), k % (n - 1));
                    let c = i + n * j;
                    Face { lower: c, upper: c + 1, axis: 0 }
                } else {
                    let k = k - per_axis;
                    let c = k;
                    Face { lower: c, upper: c + n, axis: 1 }
                }
            }
        }
    }

    /// Product of face area and centre-to-centre distance, the volume that
    /// a face-centred quantity represents in a discrete integral.
    pub fn face_volume(&self) -> f64 {
        self.cell_volume()
    }

    /// Neighbours of cell `i` across flux-carrying faces.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let n = self.n;
        let mut out = Vec::with_capacity(4);
        match self.kind {
            GridKind::Periodic1D => {
                out.push((i + n - 1) % n);
                out.push((i + 1) % n);
            }
            GridKind::Truncated1D => {
                if i > 0 {
                    out.push(i - 1);
                }
                if i + 1 < n {
                    out.push(i + 1);
                }
            }
            GridKind::Tensor2D => {
                let (ix, iy) = (i % n, i / n);
                if ix > 0 {
                    out.push(i - 1);
                }
                if ix + 1 < n {
                    out.push(i + 1);
                }
                if iy > 0 {
                    out.push(i - n);
                }
                if iy + 1 < n {
                    out.push(i + n);
                }
            }
        }
        out
    }

    pub fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_cells() {
            return Err(Error::Dimension { expected: self.n_cells(), got: values.len() });
        }
        Ok(())
    }

    /// Midpoint quadrature `Σ values_i · vol`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        Ok(values.iter().sum::<f64>() * self.cell_volume())
    }

    /// Quadrature of `values_i · weights_i` without allocating the product.
    pub fn integrate_product(&self, values: &[f64], weights: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        self.check_len(weights)?;
        Ok(values.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() * self.cell_volume())
    }
}

pub struct Faces<'a> {
    grid: &'a Grid,
    next: usize,
}

impl Iterator for Faces<'_> {
    type Item = Face;

    fn next(&mut self) -> Option<Face> {
        if self.next >= self.grid.n_faces() {
            return None;
        }
        let face = self.grid.face_at(self.next);
        self.next += 1;
        Some(face)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.grid.n_faces() - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Faces<'_> {}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    #[test]
    fn periodic_partition() {
        let g = Grid::periodic(4).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.axis_centers(), &[0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.n_faces(), 4);
        assert_eq!(g.faces().last().unwrap(), Face { lower: 3, upper: 0, axis: 0 });
    }

    #[test]
    fn truncated_partition() {
        let g = Grid::truncated(8, 2.0).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.axis_centers()[0], -1.75);
        assert_eq!(g.axis_centers()[7], 1.75);
        assert_eq!(g.n_faces(), 7);
    }

    #[test]
    fn tensor_partition() {
        let g = Grid::tensor(16, 3.0).unwrap();
        assert_eq!(g.n_cells(), 256);
        assert!((g.cell_volume() - (6.0f64 / 16.0).powi(2)).abs() < 1e-15);
        assert_eq!(g.n_faces(), 2 * 16 * 15);
        let total = g.integrate(&vec![1.0; 256]).unwrap();
        assert!((total - 36.0).abs() <= 1e-12 * 36.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(Grid::periodic(3), Err(Error::Config(_))));
        assert!(matches!(Grid::new(GridKind::Periodic1D, 8, Some(1.0)), Err(Error::Config(_))));
        assert!(matches!(Grid::new(GridKind::Truncated1D, 8, None), Err(Error::Config(_))));
        assert!(matches!(Grid::truncated(8, 0.0), Err(Error::Config(_))));
        assert!(matches!(Grid::tensor(8, -1.0), Err(Error::Config(_))));
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::periodic(4).unwrap();
        assert_eq!(g.integrate(&[1.5, 1.5, 0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(g.integrate(&[1.0; 4]).unwrap(), 1.0);
        let t = Grid::truncated(8, 2.0).unwrap();
        assert_eq!(t.integrate(t.axis_centers()).unwrap(), 0.0);
        assert_eq!(
            t.integrate(&[1.0; 3]),
            Err(Error::Dimension { expected: 8, got: 3 })
        );
    }

    #[test]
    fn neighbors_are_symmetric_and_match_faces() {
        for g in [
            Grid::periodic(5).unwrap(),
            Grid::truncated(6, 1.0).unwrap(),
            Grid::tensor(5, 1.0).unwrap(),
        ] {
            let mut count = 0;
            for i in 0..g.n_cells() {
                for j in g.neighbors(i) {
                    assert!(g.neighbors(j).contains(&i));
                    count += 1;
                }
            }
            assert_eq!(count, 2 * g.n_faces());
            for f in g.faces() {
                assert!(g.neighbors(f.lower).contains(&f.upper));
            }
        }
    }

    #[test]
    fn tensor_faces_are_unique() {
        let g = Grid::tensor(6, 1.0).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for f in g.faces() {
            assert!(seen.insert((f.lower, f.upper)));
            let [xl, yl] = g.center(f.lower);
            let [xu, yu] = g.center(f.upper);
            let d = if f.axis == 0 { (xu - xl, yu - yl) } else { (yu - yl, xu - xl) };
            assert!((d.0 - g.h()).abs() < 1e-12 && d.1.abs() < 1e-12);
        }
    }
}
