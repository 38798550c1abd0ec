//! Numerical toolkit for weighted variable-exponent Sobolev capacities,
//! relative condenser capacities, and Wiener-type thinness profiles on
//! discretized domains.
//!
//! The building blocks are grid-sampled fields: a variable exponent
//! `p(x) > 1`, a positive weight, and scalar fields living on a uniform
//! rectangular lattice in 1, 2 or 3 dimensions. On top of those the crate
//! evaluates weighted modulars and Luxemburg norms, minimizes the
//! obstacle-constrained convex energies that define the two capacities,
//! aggregates dyadic capacity ratios into Wiener sums and integrals, and
//! ships an empirical verification harness for the standard inequalities
//! relating all of these quantities.
//!
//! All core math is generic over the floating-point scalar through the
//! [`Scalar`] trait; `f64` aliases are exported at the crate root.

// axis-indexed loops over several per-axis arrays read better than
// zipped iterators here, and `!(x > 0)` guards reject NaN on purpose
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod mask;
pub mod measure;
pub mod modular;
pub mod scalar;
pub mod solver;
pub mod thinness;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use capacity::{
    relative_capacity, relative_capacity_general, sobolev_capacity, AdmissibleClass,
    CapacityResult, CondenserSpec, GeneralCapacityResult, ObstacleMode,
};
pub use field::{gradient, sample_exponent, sample_weight, ExponentSpec, WeightSpec};
pub use grid::build_grid;
pub use mask::{annulus_mask, ball_mask, box_mask, half_space_mask, segment_mask, RegionKind};
pub use measure::{doubling_constant, lebesgue_measure, weighted_measure};
pub use modular::{luxemburg_norm, modular, sobolev_modular, sobolev_norm};
pub use solver::{minimize_energy, EnergyKind, SolverOptions};
pub use thinness::{classify_thinness, wiener_integral, wiener_ratio, wiener_sum, Verdict};

/// Concrete `f64` instantiations of the generic core types.
pub type GridDomain = grid::GridDomain<f64>;
pub type ScalarField = field::ScalarField<f64>;
pub type VectorField = field::VectorField<f64>;
pub type ExponentField = field::ExponentField<f64>;
pub type WeightField = field::WeightField<f64>;
pub type RegionMask = mask::RegionMask;
pub type WienerProfile = thinness::WienerProfile<f64>;
pub type CheckReport = verify::CheckReport;
pub type ConstantEstimates = verify::ConstantEstimates<f64>;

/// Single-precision aliases, mainly exercised by tests to keep the core
/// honest about being scalar-generic.
pub mod f32_types {
    pub type GridDomain = crate::grid::GridDomain<f32>;
    pub type ScalarField = crate::field::ScalarField<f32>;
    pub type ExponentField = crate::field::ExponentField<f32>;
    pub type WeightField = crate::field::WeightField<f32>;
}
