//! Uniform rectangular lattices in 1, 2 or 3 dimensions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_DIM: usize = 3;

/// A uniform node-centered grid over an axis-aligned box.
///
/// Node coordinates are reproduced exactly by `origin + i * spacing` per
/// axis. Linear node indices run with axis 0 fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridDomain<T> {
    dim: usize,
    origin: [T; MAX_DIM],
    extent: [T; MAX_DIM],
    nodes: [usize; MAX_DIM],
    spacing: [T; MAX_DIM],
}

/// Builds a grid with `nodes_per_axis[a]` nodes spanning
/// `[origin[a], origin[a] + extent[a]]` on each axis.
pub fn build_grid<T: Scalar>(
    dim: usize,
    origin: &[T],
    extent: &[T],
    nodes_per_axis: &[usize],
) -> Result<GridDomain<T>> {
    GridDomain::new(dim, origin, extent, nodes_per_axis)
}

impl<T: Scalar> GridDomain<T> {
    pub fn new(dim: usize, origin: &[T], extent: &[T], nodes_per_axis: &[usize]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if origin.len() != dim || extent.len() != dim || nodes_per_axis.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin/extent/nodes must each have {dim} entries"
            )));
        }
        let mut g = GridDomain {
            dim,
            origin: [T::zero(); MAX_DIM],
            extent: [T::zero(); MAX_DIM],
            nodes: [1; MAX_DIM],
            spacing: [T::zero(); MAX_DIM],
        };
        for a in 0..dim {
            if !extent[a].is_finite() || extent[a] <= T::zero() {
                return Err(Error::InvalidGrid(format!(
                    "extent on axis {a} must be positive, got {}",
                    extent[a]
                )));
            }
            if nodes_per_axis[a] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "at least 3 nodes per axis required, got {} on axis {a}",
                    nodes_per_axis[a]
                )));
            }
            g.origin[a] = origin[a];
            g.extent[a] = extent[a];
            g.nodes[a] = nodes_per_axis[a];
            g.spacing[a] = extent[a] / T::of((nodes_per_axis[a] - 1) as f64);
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.spacing[axis]
    }

    /// Smallest spacing over the axes.
    pub fn min_spacing(&self) -> T {
        (0..self.dim)
            .map(|a| self.spacing[a])
            .fold(T::infinity(), T::min)
    }

    pub fn origin(&self, axis: usize) -> T {
        self.origin[axis]
    }

    pub fn extent(&self, axis: usize) -> T {
        self.extent[axis]
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nodes[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear-index stride of one step along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes[..axis].iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> T {
        self.origin[axis] + T::of(i as f64) * self.spacing[axis]
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim).rev() {
            idx = idx * self.nodes[a] + multi[a];
        }
        idx
    }

    pub fn multi(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            m[a] = idx % self.nodes[a];
            idx /= self.nodes[a];
        }
        m
    }

    /// Physical coordinates of a node, padded with zeros above `dim`.
    pub fn point(&self, idx: usize) -> [T; MAX_DIM] {
        let m = self.multi(idx);
        let mut p = [T::zero(); MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.coord(a, m[a]);
        }
        p
    }

    /// Product of spacings: the volume of one quadrature cell.
    pub fn cell_volume(&self) -> T {
        (0..self.dim).fold(T::one(), |v, a| v * self.spacing[a])
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> T {
        (0..self.dim)
            .map(|a| self.extent[a] * self.extent[a])
            .fold(T::zero(), |s, e| s + e)
            .sqrt()
    }

    /// True when the node touches any face of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let m = self.multi(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] == self.nodes[a] - 1)
    }

    /// Squared Euclidean distance from a node to a point given on the
    /// first `dim` axes.
    pub fn dist_sq(&self, idx: usize, center: &[T]) -> T {
        let m = self.multi(idx);
        let mut s = T::zero();
        for a in 0..self.dim {
            let d = self.coord(a, m[a]) - center[a];
            s = s + d * d;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_spacing() {
        let g = build_grid::<f64>(1, &[0.0], &[1.0], &[11]).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.spacing(0) - 0.1).abs() < 1e-15);
        assert_eq!(g.coord(0, 0), 0.0);
        assert!((g.coord(0, 10) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_spacing() {
        let g = build_grid::<f64>(2, &[-1.0, -1.0], &[2.0, 2.0], &[129, 129]).unwrap();
        assert!((g.spacing(0) - 1.0 / 64.0).abs() < 1e-15);
        assert!((g.spacing(1) - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(g.len(), 129 * 129);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(build_grid::<f64>(2, &[0.0, 0.0], &[1.0, 1.0], &[2, 5]).is_err());
        assert!(build_grid::<f64>(0, &[], &[], &[]).is_err());
        assert!(build_grid::<f64>(4, &[0.0; 4], &[1.0; 4], &[5; 4]).is_err());
        assert!(build_grid::<f64>(1, &[0.0], &[-1.0], &[5]).is_err());
        assert!(build_grid::<f64>(1, &[0.0], &[0.0], &[5]).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = build_grid::<f64>(3, &[0.0; 3], &[1.0; 3], &[4, 5, 6]).unwrap();
        for idx in 0..g.len() {
            let m = g.multi(idx);
            assert_eq!(g.index(&m[..3]), idx);
        }
        assert_eq!(g.stride(0), 1);
        assert_eq!(g.stride(1), 4);
        assert_eq!(g.stride(2), 20);
    }

    #[test]
    fn boundary_detection() {
        let g = build_grid::<f64>(2, &[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        let interior: Vec<usize> = (0..g.len()).filter(|&i| !g.on_boundary(i)).collect();
        assert_eq!(interior.len(), 9);
    }
}
