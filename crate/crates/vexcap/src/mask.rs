//! Node-membership masks: the grid realization of compact, open and
//! arbitrary subsets of the domain.
//!
//! Openness degenerates on a lattice, so the `kind` tag carries the
//! intended topology and the capacity routines pick obstacle realizations
//! accordingly: "open set containing E" is `dilate(E)` by one cell, and the
//! compact exhaustion of an open set stabilizes at `erode` by one cell.

use crate::error::{Error, Result};
use crate::grid::{GridDomain, MAX_DIM};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Compact,
    Open,
    Arbitrary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    dim: usize,
    nodes: [usize; MAX_DIM],
    bits: Vec<bool>,
    kind: RegionKind,
}

impl RegionMask {
    pub fn empty<T: Scalar>(grid: &GridDomain<T>, kind: RegionKind) -> Self {
        let mut nodes = [1usize; MAX_DIM];
        for a in 0..grid.dim() {
            nodes[a] = grid.nodes(a);
        }
        RegionMask {
            dim: grid.dim(),
            nodes,
            bits: vec![false; grid.len()],
            kind,
        }
    }

    pub fn full<T: Scalar>(grid: &GridDomain<T>, kind: RegionKind) -> Self {
        let mut m = Self::empty(grid, kind);
        m.bits.iter_mut().for_each(|b| *b = true);
        m
    }

    /// Membership from a node predicate.
    pub fn from_fn<T: Scalar, F: Fn(usize) -> bool>(
        grid: &GridDomain<T>,
        kind: RegionKind,
        f: F,
    ) -> Self {
        let mut m = Self::empty(grid, kind);
        for i in 0..m.bits.len() {
            m.bits[i] = f(i);
        }
        m
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: RegionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn insert(&mut self, idx: usize) {
        self.bits[idx] = true;
    }

    pub fn remove(&mut self, idx: usize) {
        self.bits[idx] = false;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn same_shape(&self, other: &RegionMask) -> bool {
        self.dim == other.dim && self.nodes == other.nodes
    }

    pub fn matches_grid<T: Scalar>(&self, grid: &GridDomain<T>) -> bool {
        self.dim == grid.dim() && (0..self.dim).all(|a| self.nodes[a] == grid.nodes(a))
    }

    fn check_shape(&self, other: &RegionMask) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn combined_kind(&self, other: &RegionMask) -> RegionKind {
        if self.kind == other.kind {
            self.kind
        } else {
            RegionKind::Arbitrary
        }
    }

    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        self.check_shape(other)?;
        let mut m = self.clone();
        m.kind = self.combined_kind(other);
        for (b, &o) in m.bits.iter_mut().zip(&other.bits) {
            *b = *b || o;
        }
        Ok(m)
    }

    pub fn intersect(&self, other: &RegionMask) -> Result<RegionMask> {
        self.check_shape(other)?;
        let mut m = self.clone();
        m.kind = self.combined_kind(other);
        for (b, &o) in m.bits.iter_mut().zip(&other.bits) {
            *b = *b && o;
        }
        Ok(m)
    }

    pub fn difference(&self, other: &RegionMask) -> Result<RegionMask> {
        self.check_shape(other)?;
        let mut m = self.clone();
        m.kind = RegionKind::Arbitrary;
        for (b, &o) in m.bits.iter_mut().zip(&other.bits) {
            *b = *b && !o;
        }
        Ok(m)
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.same_shape(other) && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    fn multi(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            m[a] = idx % self.nodes[a];
            idx /= self.nodes[a];
        }
        m
    }

    fn stride(&self, axis: usize) -> usize {
        self.nodes[..axis].iter().product()
    }

    /// Adds the one-cell face neighborhood: the minimal strict enlargement
    /// standing in for "open set containing" this mask.
    pub fn dilate(&self) -> RegionMask {
        let mut out = self.clone();
        for idx in 0..self.bits.len() {
            if !self.bits[idx] {
                continue;
            }
            let m = self.multi(idx);
            for a in 0..self.dim {
                let s = self.stride(a);
                if m[a] > 0 {
                    out.bits[idx - s] = true;
                }
                if m[a] + 1 < self.nodes[a] {
                    out.bits[idx + s] = true;
                }
            }
        }
        out
    }

    /// Keeps nodes whose full face neighborhood lies inside the mask.
    /// Nodes on the grid boundary are always removed (outside-grid
    /// neighbors count as absent).
    pub fn erode(&self) -> RegionMask {
        let mut out = self.clone();
        for idx in 0..self.bits.len() {
            if !self.bits[idx] {
                continue;
            }
            let m = self.multi(idx);
            let mut keep = true;
            for a in 0..self.dim {
                let s = self.stride(a);
                if m[a] == 0 || m[a] + 1 == self.nodes[a] {
                    keep = false;
                    break;
                }
                if !self.bits[idx - s] || !self.bits[idx + s] {
                    keep = false;
                    break;
                }
            }
            out.bits[idx] = keep;
        }
        out
    }

    /// Mask nodes that touch the complement (or the grid edge): the
    /// discrete boundary layer of the set.
    pub fn boundary_layer(&self) -> RegionMask {
        let eroded = self.erode();
        let mut out = self.clone();
        out.kind = RegionKind::Arbitrary;
        for (b, &e) in out.bits.iter_mut().zip(&eroded.bits) {
            *b = *b && !e;
        }
        out
    }
}

fn require_nonempty(m: RegionMask, what: &str) -> Result<RegionMask> {
    if m.is_empty() {
        Err(Error::EmptyRegion(format!(
            "{what} contains no grid nodes (radius below grid spacing, or region outside the box)"
        )))
    } else {
        Ok(m)
    }
}

/// Closed ball `|x - center| <= r`, tagged compact.
pub fn ball_mask<T: Scalar>(grid: &GridDomain<T>, center: &[T], r: T) -> Result<RegionMask> {
    if center.len() != grid.dim() {
        return Err(Error::InvalidRegion("center has wrong dimension".into()));
    }
    if !(r > T::zero()) {
        return Err(Error::InvalidRegion("ball radius must be positive".into()));
    }
    let rsq = r * r;
    let m = RegionMask::from_fn(grid, RegionKind::Compact, |i| {
        grid.dist_sq(i, center) <= rsq
    });
    require_nonempty(m, "ball")
}

/// Open annulus `r1 < |x - center| < r2`.
pub fn annulus_mask<T: Scalar>(
    grid: &GridDomain<T>,
    center: &[T],
    r1: T,
    r2: T,
) -> Result<RegionMask> {
    if center.len() != grid.dim() {
        return Err(Error::InvalidRegion("center has wrong dimension".into()));
    }
    if !(r1 >= T::zero() && r2 > r1) {
        return Err(Error::InvalidRegion(format!(
            "annulus radii must satisfy 0 <= r1 < r2, got ({r1}, {r2})"
        )));
    }
    let lo = r1 * r1;
    let hi = r2 * r2;
    let m = RegionMask::from_fn(grid, RegionKind::Open, |i| {
        let d = grid.dist_sq(i, center);
        d > lo && d < hi
    });
    require_nonempty(m, "annulus")
}

/// Closed axis-aligned box `lo <= x <= hi`, tagged compact.
pub fn box_mask<T: Scalar>(grid: &GridDomain<T>, lo: &[T], hi: &[T]) -> Result<RegionMask> {
    if lo.len() != grid.dim() || hi.len() != grid.dim() {
        return Err(Error::InvalidRegion(
            "box corner has wrong dimension".into(),
        ));
    }
    for a in 0..grid.dim() {
        if !(lo[a] <= hi[a]) {
            return Err(Error::InvalidRegion("box corners must be ordered".into()));
        }
    }
    let m = RegionMask::from_fn(grid, RegionKind::Compact, |i| {
        let p = grid.point(i);
        (0..grid.dim()).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    });
    require_nonempty(m, "box")
}

/// Closed half-space `normal . x >= offset`, tagged arbitrary.
pub fn half_space_mask<T: Scalar>(
    grid: &GridDomain<T>,
    normal: &[T],
    offset: T,
) -> Result<RegionMask> {
    if normal.len() != grid.dim() {
        return Err(Error::InvalidRegion("normal has wrong dimension".into()));
    }
    if normal.iter().all(|&c| c == T::zero()) {
        return Err(Error::InvalidRegion("normal must be nonzero".into()));
    }
    let m = RegionMask::from_fn(grid, RegionKind::Arbitrary, |i| {
        let p = grid.point(i);
        let dot = (0..grid.dim()).fold(T::zero(), |s, a| s + normal[a] * p[a]);
        dot >= offset
    });
    require_nonempty(m, "half-space")
}

/// Nodes within `thickness` of the segment `[a, b]`; `thickness` defaults
/// to 0.55 * min spacing, giving a one-node-wide staircase. Tagged compact.
pub fn segment_mask<T: Scalar>(
    grid: &GridDomain<T>,
    a: &[T],
    b: &[T],
    thickness: Option<T>,
) -> Result<RegionMask> {
    if a.len() != grid.dim() || b.len() != grid.dim() {
        return Err(Error::InvalidRegion("endpoint has wrong dimension".into()));
    }
    let thick = thickness.unwrap_or_else(|| T::of(0.55) * grid.min_spacing());
    let tsq = thick * thick;
    let dim = grid.dim();
    let mut ab = [T::zero(); MAX_DIM];
    let mut len_sq = T::zero();
    for x in 0..dim {
        ab[x] = b[x] - a[x];
        len_sq = len_sq + ab[x] * ab[x];
    }
    let m = RegionMask::from_fn(grid, RegionKind::Compact, |i| {
        let p = grid.point(i);
        // distance from p to the segment
        let mut t = T::zero();
        if len_sq > T::zero() {
            for x in 0..dim {
                t = t + (p[x] - a[x]) * ab[x];
            }
            t = (t / len_sq).max(T::zero()).min(T::one());
        }
        let mut d = T::zero();
        for x in 0..dim {
            let q = a[x] + t * ab[x];
            let dx = p[x] - q;
            d = d + dx * dx;
        }
        d <= tsq
    });
    require_nonempty(m, "segment")
}
