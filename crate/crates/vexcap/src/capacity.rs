//! Sobolev and relative (condenser) capacities by obstacle-constrained
//! convex minimization.

use crate::error::{Error, Result};
use crate::field::{ExponentField, ScalarField, WeightField};
use crate::grid::GridDomain;
use crate::mask::{RegionKind, RegionMask};
use crate::scalar::Scalar;
use crate::solver::{minimize_energy, EnergyKind, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmissibleClass {
    Sobolev,
    Relative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObstacleMode {
    /// Pin `f = 1` on the inner set itself (relative capacity; the
    /// `>= 1`-on-K class gives the same infimum as the `> 1` class).
    OnSet,
    /// Pin `f = 1` on the one-cell dilation (Sobolev capacity's
    /// "open set containing E").
    OnDilatedSet,
}

/// Inner plate, outer region and obstacle realization of one capacity
/// solve.
#[derive(Clone, Debug)]
pub struct CondenserSpec {
    inner: RegionMask,
    outer: RegionMask,
    obstacle_mode: ObstacleMode,
}

impl CondenserSpec {
    pub fn new(inner: RegionMask, outer: RegionMask, obstacle_mode: ObstacleMode) -> Result<Self> {
        if !inner.same_shape(&outer) {
            return Err(Error::GridMismatch);
        }
        if !inner.is_subset_of(&outer) {
            return Err(Error::InvalidCondenser(
                "inner set must be contained in the outer region".into(),
            ));
        }
        Ok(CondenserSpec {
            inner,
            outer,
            obstacle_mode,
        })
    }

    pub fn inner(&self) -> &RegionMask {
        &self.inner
    }

    pub fn outer(&self) -> &RegionMask {
        &self.outer
    }

    pub fn obstacle_mode(&self) -> ObstacleMode {
        self.obstacle_mode
    }

    /// The node set actually pinned to 1, restricted to the outer region.
    pub fn effective_obstacle(&self) -> RegionMask {
        match self.obstacle_mode {
            ObstacleMode::OnSet => self.inner.clone(),
            ObstacleMode::OnDilatedSet => self
                .inner
                .dilate()
                .intersect(&self.outer)
                .expect("same shape by construction"),
        }
    }

    pub fn validate<T: Scalar>(&self, grid: &GridDomain<T>) -> Result<()> {
        if !self.inner.matches_grid(grid) || !self.outer.matches_grid(grid) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Outcome of one capacity solve.
#[derive(Clone, Debug)]
pub struct CapacityResult<T> {
    /// The minimized energy: the capacity value.
    pub value: T,
    /// Discrete minimizer on the full grid; satisfies its constraints
    /// exactly.
    pub minimizer: ScalarField<T>,
    pub iterations: usize,
    pub final_step_decrease: T,
    pub converged: bool,
    pub admissible_class: AdmissibleClass,
    /// Soft diagnostics such as boundary-leak warnings.
    pub notes: Vec<String>,
    pub energy_trace: Option<Vec<T>>,
}

impl<T: Scalar> CapacityResult<T> {
    /// Writes the per-iteration energy trace as CSV (`iteration,energy`).
    pub fn write_energy_trace_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,energy")?;
        if let Some(trace) = &self.energy_trace {
            for (i, e) in trace.iter().enumerate() {
                writeln!(out, "{i},{}", e.as_f64())?;
            }
        }
        Ok(())
    }

    /// One-line structured diagnostics record.
    pub fn diagnostics(&self) -> String {
        format!(
            "class={:?} value={} iterations={} final_step_decrease={} converged={}{}",
            self.admissible_class,
            self.value.as_f64(),
            self.iterations,
            self.final_step_decrease.as_f64(),
            self.converged,
            if self.notes.is_empty() {
                String::new()
            } else {
                format!(" notes={}", self.notes.join("; "))
            }
        )
    }
}

/// Sobolev capacity of a nonempty set: minimizes the full first-order
/// modular over fields that are 1 on the one-cell dilation of `e`, free
/// elsewhere on the grid box. The box must be large enough for the
/// minimizer to decay before the boundary; a leak above 1e-3 on the
/// boundary layer is recorded as a note.
pub fn sobolev_capacity<T: Scalar>(
    e: &RegionMask,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    opts: &SolverOptions<T>,
) -> Result<CapacityResult<T>> {
    let grid = p.grid();
    // the zero field is admissible for the empty set
    let outer = RegionMask::full(grid, RegionKind::Open);
    let spec = CondenserSpec::new(e.clone(), outer, ObstacleMode::OnDilatedSet)?;
    let mut result = minimize_energy(&spec, p, w, EnergyKind::FullSobolev, opts)?;

    let leak = grid_boundary_max(&result.minimizer);
    if leak > T::of(1e-3) {
        result.notes.push(format!(
            "boundary leak: minimizer reaches {} on the box boundary; enlarge the box",
            leak.as_f64()
        ));
    }
    Ok(result)
}

fn grid_boundary_max<T: Scalar>(f: &ScalarField<T>) -> T {
    let grid = f.grid();
    let mut worst = T::zero();
    for idx in 0..grid.len() {
        if grid.on_boundary(idx) {
            worst = worst.max(f.values()[idx].abs());
        }
    }
    worst
}

/// Relative capacity of the condenser `(k, omega)`: minimizes the
/// gradient modular over fields pinned to 1 on `k`, vanishing outside
/// `omega`. `k` must be compact-kind and stay clear of the discrete
/// boundary layer of `omega`.
pub fn relative_capacity<T: Scalar>(
    k: &RegionMask,
    omega: &RegionMask,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    opts: &SolverOptions<T>,
) -> Result<CapacityResult<T>> {
    if k.kind() != RegionKind::Compact {
        return Err(Error::InvalidCondenser(
            "inner plate of a relative capacity must be compact-kind".into(),
        ));
    }
    if !k.is_empty() {
        let rim = omega.boundary_layer();
        if !k.intersect(&rim)?.is_empty() {
            return Err(Error::InvalidCondenser(
                "inner plate touches the boundary layer of the outer region".into(),
            ));
        }
    }
    relative_capacity_inner(k, omega, p, w, opts)
}

/// Same solve without the compact-tag and rim requirements; the general
/// routes use this for derived obstacles (dilations, erosions, open sets
/// whose nodes reach the rim).
fn relative_capacity_inner<T: Scalar>(
    k: &RegionMask,
    omega: &RegionMask,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    opts: &SolverOptions<T>,
) -> Result<CapacityResult<T>> {
    let spec = CondenserSpec::new(k.clone(), omega.clone(), ObstacleMode::OnSet)?;
    minimize_energy(&spec, p, w, EnergyKind::DirichletOnly, opts)
}

/// Relative capacity of an open or arbitrary set, reported through both
/// defining routes.
#[derive(Clone, Debug)]
pub struct GeneralCapacityResult<T> {
    /// The defining value: the inner (compact-exhaustion) route for open
    /// sets, the outer (open-superset) route for arbitrary sets.
    pub value: T,
    /// Supremum route over compact subsets.
    pub inner: CapacityResult<T>,
    /// Infimum route over open supersets.
    pub outer: CapacityResult<T>,
}

/// Relative capacity for any mask kind.
///
/// Compact sets solve directly. Open sets take the supremum over the
/// compact exhaustion, which on a lattice stabilizes at the one-cell
/// erosion; the solve with the set itself as obstacle is reported as the
/// outer route. Arbitrary sets take the infimum over open supersets,
/// realized by the one-cell dilation clipped to `omega`; the direct solve
/// is reported as the inner route.
pub fn relative_capacity_general<T: Scalar>(
    a: &RegionMask,
    omega: &RegionMask,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    opts: &SolverOptions<T>,
) -> Result<GeneralCapacityResult<T>> {
    if !a.is_subset_of(omega) {
        return Err(Error::InvalidCondenser(
            "set must be contained in the outer region".into(),
        ));
    }
    match a.kind() {
        RegionKind::Compact => {
            let r = relative_capacity(a, omega, p, w, opts)?;
            Ok(GeneralCapacityResult {
                value: r.value,
                inner: r.clone(),
                outer: r,
            })
        }
        RegionKind::Open => {
            let eroded = a.erode();
            let inner = relative_capacity_inner(&eroded, omega, p, w, opts)?;
            let outer = relative_capacity_inner(a, omega, p, w, opts)?;
            Ok(GeneralCapacityResult {
                value: inner.value,
                inner,
                outer,
            })
        }
        RegionKind::Arbitrary => {
            let dilated = a.dilate().intersect(omega)?;
            let inner = relative_capacity_inner(a, omega, p, w, opts)?;
            let outer = relative_capacity_inner(&dilated, omega, p, w, opts)?;
            Ok(GeneralCapacityResult {
                value: outer.value,
                inner,
                outer,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_exponent, sample_weight, ExponentSpec, WeightSpec};
    use crate::grid::build_grid;
    use crate::mask::{ball_mask, box_mask};
    use crate::modular::modular;

    fn setup_1d(n: usize, p0: f64) -> (GridDomain<f64>, ExponentField<f64>, WeightField<f64>) {
        let g = build_grid(1, &[-1.0], &[2.0], &[n]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(p0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        (g, p, w)
    }

    #[test]
    fn relative_capacity_1d_p2_and_p3() {
        // affine minimizer: value 2 * gap^(1-p), gap = 0.75
        for (p0, expect) in [(2.0, 8.0 / 3.0), (3.0, 32.0 / 9.0)] {
            let (g, p, w) = setup_1d(513, p0);
            let k = box_mask(&g, &[-0.25], &[0.25]).unwrap();
            let omega = RegionMask::full(&g, RegionKind::Open).erode();
            let r = relative_capacity(&k, &omega, &p, &w, &Default::default()).unwrap();
            assert!(r.converged);
            assert!(
                (r.value - expect).abs() < expect * 0.02,
                "p = {p0}: {} vs {expect}",
                r.value
            );
        }
    }

    #[test]
    fn empty_inner_is_zero_exactly() {
        let (g, p, w) = setup_1d(65, 2.0);
        let k = RegionMask::empty(&g, RegionKind::Compact);
        let omega = RegionMask::full(&g, RegionKind::Open).erode();
        let r = relative_capacity(&k, &omega, &p, &w, &Default::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn energy_identity_via_modular() {
        let (g, p, w) = setup_1d(257, 2.5);
        let k = box_mask(&g, &[-0.25], &[0.25]).unwrap();
        let omega = RegionMask::full(&g, RegionKind::Open).erode();
        let r = relative_capacity(&k, &omega, &p, &w, &Default::default()).unwrap();
        let full = RegionMask::full(&g, RegionKind::Arbitrary);
        let grad_mag = crate::field::gradient(&r.minimizer).magnitude();
        let rho = modular(&grad_mag, &p, &w, &full).unwrap();
        assert!(
            ((rho - r.value) / r.value).abs() < 1e-10,
            "energy identity: {} vs {}",
            rho,
            r.value
        );
    }

    #[test]
    fn plate_touching_outer_boundary_rejected() {
        let (g, p, w) = setup_1d(65, 2.0);
        let k = box_mask(&g, &[-1.0], &[0.25]).unwrap();
        let omega = RegionMask::full(&g, RegionKind::Open).erode();
        assert!(relative_capacity(&k, &omega, &p, &w, &Default::default()).is_err());
    }

    #[test]
    fn monotone_in_the_plate() {
        let (g, p, w) = setup_1d(257, 2.0);
        let k1 = box_mask(&g, &[-0.125], &[0.125]).unwrap();
        let k2 = box_mask(&g, &[-0.25], &[0.25]).unwrap();
        let omega = RegionMask::full(&g, RegionKind::Open).erode();
        let r1 = relative_capacity(&k1, &omega, &p, &w, &Default::default()).unwrap();
        let r2 = relative_capacity(&k2, &omega, &p, &w, &Default::default()).unwrap();
        assert!(r1.value <= r2.value + 1e-6 * r2.value.max(1.0));
    }

    #[test]
    fn sobolev_capacity_1d_interval() {
        // E = [-1, 1] in the box [-8, 8]: exponential tails, value 4
        let g = build_grid::<f64>(1, &[-8.0], &[16.0], &[2049]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let e = box_mask(&g, &[-1.0], &[1.0]).unwrap();
        let r = sobolev_capacity(&e, &p, &w, &Default::default()).unwrap();
        assert!(r.converged);
        assert!(
            (r.value - 4.0).abs() < 4.0 * 0.03,
            "sobolev capacity {} vs 4",
            r.value
        );
        // the tail reaches ~e^{-7} at the box edge, right at the warn level
        let boundary = r.minimizer.values()[0].max(*r.minimizer.values().last().unwrap());
        assert!(boundary < 5e-3, "tail should nearly vanish, got {boundary}");
    }

    #[test]
    fn sobolev_capacity_warns_on_small_box() {
        let g = build_grid::<f64>(1, &[-1.5], &[3.0], &[129]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let e = box_mask(&g, &[-1.0], &[1.0]).unwrap();
        let r = sobolev_capacity(&e, &p, &w, &Default::default()).unwrap();
        assert!(!r.notes.is_empty(), "leak on a tight box should be noted");
    }

    #[test]
    fn general_capacity_routes() {
        let g = build_grid::<f64>(2, &[-1.0, -1.0], &[2.0, 2.0], &[65, 65]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let omega = ball_mask(&g, &[0.0, 0.0], 0.8)
            .unwrap()
            .with_kind(RegionKind::Open);

        // open set: exhaustion stabilizes, the two routes stay close
        let u = ball_mask(&g, &[0.0, 0.0], 0.3)
            .unwrap()
            .with_kind(RegionKind::Open);
        let r = relative_capacity_general(&u, &omega, &p, &w, &Default::default()).unwrap();
        assert_eq!(r.value, r.inner.value);
        assert!(r.inner.value <= r.outer.value + 1e-9);
        assert!(
            (r.outer.value - r.inner.value) < 0.15 * r.outer.value,
            "open-set gap too wide: {} vs {}",
            r.inner.value,
            r.outer.value
        );

        // single node: the dilation is the only open superset step
        let mut single = RegionMask::empty(&g, RegionKind::Arbitrary);
        single.insert(g.index(&[32, 32]));
        let r = relative_capacity_general(&single, &omega, &p, &w, &Default::default()).unwrap();
        assert_eq!(r.value, r.outer.value);
        assert!(r.inner.value <= r.outer.value + 1e-9);
        assert!(r.outer.value > 0.0);
    }

    #[test]
    fn nested_monotonicity_general() {
        let g = build_grid::<f64>(1, &[-1.0], &[2.0], &[257]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let a1 = box_mask(&g, &[-0.1], &[0.1]).unwrap();
        let a2 = box_mask(&g, &[-0.3], &[0.3]).unwrap();
        let omega1 = RegionMask::full(&g, RegionKind::Open).erode();
        let omega2 = box_mask(&g, &[-0.8], &[0.8])
            .unwrap()
            .with_kind(RegionKind::Open);
        let r1 = relative_capacity_general(&a1, &omega1, &p, &w, &Default::default()).unwrap();
        let r2 = relative_capacity_general(&a2, &omega2, &p, &w, &Default::default()).unwrap();
        assert!(r1.value <= r2.value + 1e-6 * r2.value.max(1.0));
    }
}
