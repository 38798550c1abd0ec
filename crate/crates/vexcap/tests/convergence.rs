//! Refinement behavior of the capacity values on the analytic examples.

use vexcap::capacity::{relative_capacity, sobolev_capacity};
use vexcap::field::{sample_exponent, sample_weight, ExponentSpec, WeightSpec};
use vexcap::grid::build_grid;
use vexcap::mask::{box_mask, RegionKind, RegionMask};
use vexcap::solver::SolverOptions;

/// Exponential-tail Sobolev capacity: errors against the closed form must
/// shrink under dyadic refinement at first order or better.
#[test]
fn sobolev_capacity_1d_refines_at_first_order() {
    let opts = SolverOptions::default();
    let mut errors = Vec::new();
    for scale in [1usize, 2, 4] {
        let n = 512 * scale + 1;
        let g = build_grid::<f64>(1, &[-8.0], &[16.0], &[n]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let e = box_mask(&g, &[-1.0], &[1.0]).unwrap();
        let r = sobolev_capacity(&e, &p, &w, &opts).unwrap();
        errors.push((r.value - 4.0).abs());
    }
    assert!(
        errors[2] < errors[0],
        "errors must shrink under refinement: {errors:?}"
    );
    let order = (errors[0] / errors[2]).log2() / 2.0;
    assert!(
        order >= 0.8,
        "observed order {order} from errors {errors:?}"
    );
}

/// Off-lattice condenser plates: the value drifts toward the closed form
/// as the lattice resolves the plate edges.
#[test]
fn misaligned_condenser_errors_shrink() {
    let opts = SolverOptions::default();
    let exact = 1.0 / (1.0 - 0.26) + 1.0 / (1.0 - 0.23);
    let mut errors = Vec::new();
    for scale in [1usize, 2, 4] {
        let n = 128 * scale + 1;
        let g = build_grid::<f64>(1, &[-1.0], &[2.0], &[n]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let k = box_mask(&g, &[-0.23], &[0.26]).unwrap();
        let omega = RegionMask::full(&g, RegionKind::Open).erode();
        let r = relative_capacity(&k, &omega, &p, &w, &opts).unwrap();
        errors.push((r.value - exact).abs());
    }
    assert!(
        errors[2] <= errors[0] && errors[2] < exact * 0.02,
        "errors {errors:?} should shrink below 2% of {exact}"
    );
}

/// Aligned 1-D ramps are resolution-exact for both tested exponents, so
/// dyadic refinement keeps the value pinned.
#[test]
fn aligned_ramps_are_resolution_stable() {
    let opts = SolverOptions::default();
    for (p0, expect) in [(2.0, 8.0 / 3.0), (3.0, 32.0 / 9.0)] {
        let mut values = Vec::new();
        for scale in [1usize, 2] {
            let n = 256 * scale + 1;
            let g = build_grid::<f64>(1, &[-1.0], &[2.0], &[n]).unwrap();
            let p = sample_exponent(&ExponentSpec::Constant(p0), &g).unwrap();
            let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
            let k = box_mask(&g, &[-0.25], &[0.25]).unwrap();
            let omega = RegionMask::full(&g, RegionKind::Open).erode();
            values.push(relative_capacity(&k, &omega, &p, &w, &opts).unwrap().value);
        }
        for v in &values {
            assert!(
                (v - expect).abs() < expect * 5e-3,
                "p = {p0}: value {v} vs {expect}"
            );
        }
        assert!((values[0] - values[1]).abs() < expect * 5e-3);
    }
}

/// A radial segment in 3-D attached to the profile center: the dyadic
/// ratios decay only logarithmically, so the set classifies thick, in
/// line with the classical behavior of a half-line for p = 2 in three
/// dimensions. Minutes-long on one core, hence ignored by default:
/// `cargo test -p vexcap --test convergence -- --ignored`.
#[test]
#[ignore = "multi-minute 3-D solve; run explicitly"]
fn segment_in_3d_is_thick() {
    use vexcap::mask::segment_mask;
    use vexcap::thinness::{wiener_sum, Verdict};

    let n = 101usize;
    let g = build_grid::<f64>(3, &[-2.1, -2.1, -2.1], &[4.2, 4.2, 4.2], &[n, n, n]).unwrap();
    let p = sample_exponent(&ExponentSpec::Constant(2.0), &g).unwrap();
    let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
    let h = g.spacing(0);
    let seg = segment_mask(&g, &[h, 0.0, 0.0], &[0.5, 0.0, 0.0], None)
        .unwrap()
        .with_kind(RegionKind::Arbitrary);
    let profile = wiener_sum(&seg, &[0.0, 0.0, 0.0], &p, &w, 2, &SolverOptions::default()).unwrap();
    for s in &profile.scales {
        println!(
            "scale {}: r = {:.3}, ratio = {:.4}, increment = {:.4}",
            s.level, s.radius, s.ratio, s.increment
        );
    }
    assert_eq!(profile.verdict, Verdict::Thick, "{:?}", profile.verdict);
}
