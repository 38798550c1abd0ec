//! Weighted measures of node sets and the doubling-constant estimate.

use crate::error::Result;
use crate::field::WeightField;
use crate::grid::GridDomain;
use crate::mask::RegionMask;
use crate::scalar::Scalar;
use crate::util::sum_indexed;

/// Node-sum quadrature of the weight over the mask: `sum w(x) h^n`.
/// Empty masks have measure zero.
pub fn weighted_measure<T: Scalar>(mask: &RegionMask, w: &WeightField<T>) -> T {
    debug_assert!(mask.matches_grid(w.grid()));
    let vol = w.grid().cell_volume();
    let vals = w.values();
    sum_indexed(vals.len(), |i| {
        if mask.contains(i) {
            vals[i]
        } else {
            T::zero()
        }
    }) * vol
}

/// Lebesgue measure of the mask: node count times cell volume.
pub fn lebesgue_measure<T: Scalar>(mask: &RegionMask, grid: &GridDomain<T>) -> T {
    debug_assert!(mask.matches_grid(grid));
    T::of(mask.count() as f64) * grid.cell_volume()
}

/// Max of `mu(B(x0, 2r)) / mu(B(x0, r))` over the sampled balls: a lower
/// estimate of the doubling constant of the weighted measure. Balls whose
/// doubled version leaves the grid are skipped.
pub fn doubling_constant<T: Scalar>(w: &WeightField<T>, sample_balls: &[(Vec<T>, T)]) -> Result<T> {
    let grid = w.grid();
    let mut best = T::zero();
    for (center, r) in sample_balls {
        if !ball_fits(grid, center, T::of(2.0) * *r) {
            continue;
        }
        let small = match crate::mask::ball_mask(grid, center, *r) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let big = crate::mask::ball_mask(grid, center, T::of(2.0) * *r)?;
        let mu_small = weighted_measure(&small, w);
        let mu_big = weighted_measure(&big, w);
        if mu_small > T::zero() {
            best = best.max(mu_big / mu_small);
        }
    }
    Ok(best)
}

/// Whether the closed ball stays inside the grid box.
pub fn ball_fits<T: Scalar>(grid: &GridDomain<T>, center: &[T], r: T) -> bool {
    (0..grid.dim()).all(|a| {
        center[a] - r >= grid.origin(a) && center[a] + r <= grid.origin(a) + grid.extent(a)
    })
}

/// A deterministic spread of sample balls for the doubling estimate:
/// centers on a coarse sublattice, radii at dyadic fractions of the
/// smallest half-extent.
pub fn default_ball_samples<T: Scalar>(grid: &GridDomain<T>) -> Vec<(Vec<T>, T)> {
    let dim = grid.dim();
    let mut half = T::infinity();
    for a in 0..dim {
        half = half.min(grid.extent(a) * T::of(0.5));
    }
    let mut out = Vec::new();
    for split in [2usize, 3, 4] {
        for lin in 0..split.pow(dim as u32) {
            let mut rest = lin;
            let mut c = Vec::with_capacity(dim);
            for a in 0..dim {
                let k = rest % split;
                rest /= split;
                let t = T::of((k + 1) as f64) / T::of((split + 1) as f64);
                c.push(grid.origin(a) + t * grid.extent(a));
            }
            for denom in [4.0, 8.0, 16.0] {
                let r = half / T::of(denom);
                if r > T::of(2.0) * grid.min_spacing() && ball_fits(grid, &c, T::of(2.0) * r) {
                    out.push((c.clone(), r));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_exponent, sample_weight, ExponentSpec, WeightSpec};
    use crate::grid::build_grid;
    use crate::mask::{ball_mask, box_mask, RegionKind, RegionMask};

    #[test]
    fn unit_square_measure() {
        let g = build_grid::<f64>(2, &[0.0, 0.0], &[1.0, 1.0], &[65, 65]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let full = RegionMask::full(&g, RegionKind::Compact);
        let mu = weighted_measure(&full, &w);
        // node-sum quadrature overshoots the box by one cell per axis
        assert!((mu - 1.0).abs() < 3.0 * g.spacing(0));
    }

    #[test]
    fn scaled_measure() {
        let g = build_grid::<f64>(1, &[0.0], &[1.0], &[101]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(3.0), &g, &p).unwrap();
        let half = box_mask(&g, &[0.0], &[0.5]).unwrap();
        let mu = weighted_measure(&half, &w);
        assert!((mu - 1.5).abs() < 3.0 * 3.0 * g.spacing(0));
    }

    #[test]
    fn linear_weight_measure_second_order() {
        // w = |x| on [0,1]: integral 1/2; p = 3 keeps the dual integrable
        let g = build_grid::<f64>(1, &[0.0], &[1.0], &[129]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(3.0), &g).unwrap();
        let w = sample_weight(
            &WeightSpec::Power {
                center: vec![0.0],
                alpha: 1.0,
            },
            &g,
            &p,
        )
        .unwrap();
        let full = RegionMask::full(&g, RegionKind::Compact);
        let mu = weighted_measure(&full, &w);
        let h = g.spacing(0);
        assert!(
            (mu - 0.5).abs() < 2.0 * h,
            "got {mu}, expected 0.5 within {}",
            2.0 * h
        );
    }

    #[test]
    fn measure_additive_and_monotone() {
        let g = build_grid::<f64>(2, &[-1.0, -1.0], &[2.0, 2.0], &[33, 33]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let a = ball_mask(&g, &[-0.4, 0.0], 0.25).unwrap();
        let b = ball_mask(&g, &[0.4, 0.0], 0.25).unwrap();
        let u = a.union(&b).unwrap();
        let mu_a = weighted_measure(&a, &w);
        let mu_b = weighted_measure(&b, &w);
        let mu_u = weighted_measure(&u, &w);
        assert_eq!(mu_u, mu_a + mu_b);
        assert!(mu_a <= mu_u);
    }

    #[test]
    fn doubling_estimate_flat_weight() {
        // 2-D flat weight: area ratio of concentric disks approaches 4
        let g = build_grid::<f64>(2, &[-1.0, -1.0], &[2.0, 2.0], &[129, 129]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let samples = default_ball_samples(&g);
        assert!(!samples.is_empty());
        let cd = doubling_constant(&w, &samples).unwrap();
        assert!((cd - 4.0).abs() < 0.5, "doubling estimate {cd}");

        // constant weights cancel in the ratio
        let w5 = sample_weight(&WeightSpec::Constant(5.0), &g, &p).unwrap();
        let cd5 = doubling_constant(&w5, &samples).unwrap();
        assert_eq!(cd, cd5);
    }

    #[test]
    fn doubling_estimate_1d() {
        let g = build_grid::<f64>(1, &[-2.0], &[4.0], &[513]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let cd = doubling_constant(&w, &default_ball_samples(&g)).unwrap();
        assert!((cd - 2.0).abs() < 0.2, "doubling estimate {cd}");
    }
}
