//! Ready-made configurations and instance sets so the full battery can
//! run on any reasonable grid.

use crate::error::Result;
use crate::field::{
    sample_exponent, sample_weight, ExponentField, ExponentSpec, WeightField, WeightSpec,
};
use crate::grid::GridDomain;
use crate::mask::{ball_mask, box_mask, half_space_mask, RegionKind, RegionMask};
use crate::measure::ball_fits;
use crate::scalar::Scalar;
use crate::solver::SolverOptions;
use crate::verify::checks::{ComparisonInstance, NestedChain};
use crate::verify::{estimate_constants, CheckReport, ConstantEstimates};

/// A named `(p, w)` configuration.
pub struct NamedConfig<T> {
    pub name: String,
    pub p: ExponentField<T>,
    pub w: WeightField<T>,
}

fn grid_center<T: Scalar>(grid: &GridDomain<T>) -> Vec<T> {
    (0..grid.dim())
        .map(|a| grid.origin(a) + grid.extent(a) * T::of(0.5))
        .collect()
}

fn min_extent<T: Scalar>(grid: &GridDomain<T>) -> T {
    (0..grid.dim())
        .map(|a| grid.extent(a))
        .fold(T::infinity(), T::min)
}

/// The three standard `(p, w)` configurations: constant everything, a
/// bump exponent, and a power weight.
pub fn standard_configs<T: Scalar>(grid: &GridDomain<T>) -> Result<Vec<NamedConfig<T>>> {
    let center = grid_center(grid);
    let ext = min_extent(grid);

    let p_const = sample_exponent(&ExponentSpec::Constant(T::of(2.0)), grid)?;
    let w_const = sample_weight(&WeightSpec::Constant(T::one()), grid, &p_const)?;

    let p_bump = sample_exponent(
        &ExponentSpec::BumpBlend {
            p_center: T::of(2.6),
            p_outside: T::of(1.8),
            center: center.clone(),
            radius: ext * T::of(0.3),
        },
        grid,
    )?;
    let w_for_bump = sample_weight(&WeightSpec::Constant(T::one()), grid, &p_bump)?;

    // singular point off-center so condensers around the middle see a
    // genuinely varying weight
    let mut power_center = center.clone();
    power_center[0] = grid.origin(0) + grid.extent(0) * T::of(0.3);
    let w_power = sample_weight(
        &WeightSpec::Power {
            center: power_center,
            alpha: T::of(0.5),
        },
        grid,
        &p_const,
    )?;

    Ok(vec![
        NamedConfig {
            name: "constant".into(),
            p: p_const.clone(),
            w: w_const,
        },
        NamedConfig {
            name: "bump-exponent".into(),
            p: p_bump,
            w: w_for_bump,
        },
        NamedConfig {
            name: "power-weight".into(),
            p: p_const,
            w: w_power,
        },
    ])
}

/// Radii for the ball-bound battery, as fractions of the smallest extent.
pub fn standard_radii<T: Scalar>(grid: &GridDomain<T>) -> Vec<T> {
    let ext = min_extent(grid);
    [0.06, 0.1, 0.16, 0.22]
        .iter()
        .map(|&f| ext * T::of(f))
        .collect()
}

/// Annulus instances `(center, r1, r2)` around the grid middle.
pub fn standard_annuli<T: Scalar>(grid: &GridDomain<T>) -> Vec<(Vec<T>, T, T)> {
    let c = grid_center(grid);
    let ext = min_extent(grid);
    vec![
        (c.clone(), ext * T::of(0.12), ext * T::of(0.24)),
        (c.clone(), ext * T::of(0.08), ext * T::of(0.3)),
        (c, ext * T::of(0.15), ext * T::of(0.2)),
    ]
}

/// Concentric comparison instances: plates of several shapes inside a
/// bounded outer region, each paired with a ball for the two-sided form.
pub fn standard_comparison_instances<T: Scalar>(
    grid: &GridDomain<T>,
    count: usize,
) -> Result<Vec<ComparisonInstance<T>>> {
    let c = grid_center(grid);
    let ext = min_extent(grid);
    let omega = ball_mask(grid, &c, ext * T::of(0.42))?.with_kind(RegionKind::Open);
    let mut out = Vec::new();
    for k in 0..count {
        let t = T::of(k as f64) / T::of(count.max(1) as f64);
        let r_plate = ext * (T::of(0.05) + T::of(0.1) * t);
        let plate = if k % 3 == 2 {
            let half: Vec<T> = (0..grid.dim()).map(|_| r_plate).collect();
            let lo: Vec<T> = (0..grid.dim()).map(|a| c[a] - half[a]).collect();
            let hi: Vec<T> = (0..grid.dim()).map(|a| c[a] + half[a]).collect();
            box_mask(grid, &lo, &hi)?
        } else {
            ball_mask(grid, &c, r_plate)?
        };
        out.push(ComparisonInstance {
            label: format!("inst{k}"),
            plate,
            omega: omega.clone(),
            center: c.clone(),
            radius: r_plate + ext * T::of(0.04),
        });
    }
    // the empty-plate convention instance
    out.push(ComparisonInstance {
        label: "empty".into(),
        plate: RegionMask::empty(grid, RegionKind::Compact),
        omega: omega.clone(),
        center: c,
        radius: ext * T::of(0.1),
    });
    Ok(out)
}

/// Concentric nested chains around the grid middle.
pub fn standard_nested_chains<T: Scalar>(
    grid: &GridDomain<T>,
    count: usize,
) -> Result<Vec<NestedChain>> {
    let c = grid_center(grid);
    let ext = min_extent(grid);
    let mut out = Vec::new();
    for k in 0..count {
        let scale = T::of(1.0 + 0.12 * (k % 4) as f64);
        let radii: Vec<T> = [0.08, 0.14, 0.2, 0.26]
            .iter()
            .map(|&f| ext * T::of(f) * scale)
            .collect();
        let omega_r = ext * T::of(0.42);
        if !ball_fits(grid, &c, omega_r) {
            continue;
        }
        let pairs = vec![
            (
                ball_mask(grid, &c, radii[0])?,
                ball_mask(grid, &c, radii[1])?.with_kind(RegionKind::Open),
            ),
            (
                ball_mask(grid, &c, radii[2])?,
                ball_mask(grid, &c, radii[3])?.with_kind(RegionKind::Open),
            ),
        ];
        out.push(NestedChain {
            label: format!("chain{k}"),
            pairs,
            omega: ball_mask(grid, &c, omega_r)?.with_kind(RegionKind::Open),
        });
    }
    Ok(out)
}

/// The thin/thick candidate battery around a profile center. The grid
/// must contain `B(center, 2)`.
pub fn standard_wiener_battery<T: Scalar>(
    grid: &GridDomain<T>,
    center: &[T],
) -> Result<Vec<(String, RegionMask, Vec<T>)>> {
    let c = center.to_vec();
    let dim = grid.dim();
    let mut normal = vec![T::zero(); dim];
    normal[0] = T::one();
    let offset = c
        .iter()
        .zip(&normal)
        .fold(T::zero(), |s, (&x, &n)| s + x * n);

    let mut shifted = c.clone();
    shifted[0] = shifted[0] + T::of(0.45);

    let mut battery: Vec<(String, RegionMask, Vec<T>)> = vec![
        (
            "empty".into(),
            RegionMask::empty(grid, RegionKind::Arbitrary),
            c.clone(),
        ),
        (
            "full".into(),
            RegionMask::full(grid, RegionKind::Arbitrary),
            c.clone(),
        ),
        (
            "half-space".into(),
            half_space_mask(grid, &normal, offset)?,
            c.clone(),
        ),
        (
            "ball-at-center".into(),
            ball_mask(grid, &c, T::of(0.6))?.with_kind(RegionKind::Arbitrary),
            c.clone(),
        ),
        (
            "small-ball".into(),
            ball_mask(grid, &c, T::of(0.15))?.with_kind(RegionKind::Arbitrary),
            c.clone(),
        ),
        (
            "offset-ball".into(),
            ball_mask(grid, &shifted, T::of(0.3))?.with_kind(RegionKind::Arbitrary),
            c.clone(),
        ),
    ];
    if dim >= 2 {
        let ann = crate::mask::annulus_mask(grid, &c, T::of(0.2), T::of(0.7))?
            .with_kind(RegionKind::Arbitrary);
        battery.push(("annulus".into(), ann, c.clone()));
        let seg = crate::mask::segment_mask(
            grid,
            &c,
            &{
                let mut b = c.clone();
                b[1] = b[1] + T::of(0.9);
                b
            },
            None,
        )?
        .with_kind(RegionKind::Arbitrary);
        battery.push(("segment".into(), seg, c.clone()));
        let union = battery[2].1.union(&battery[5].1)?;
        battery.push(("half-union-ball".into(), union, c.clone()));
        let hollow = battery[3]
            .1
            .difference(&ball_mask(grid, &c, T::of(0.25))?)?;
        battery.push(("hollow-ball".into(), hollow, c.clone()));
    } else {
        let seg = box_mask(grid, &[c[0] + T::of(0.05)], &[c[0] + T::of(0.8)])?
            .with_kind(RegionKind::Arbitrary);
        battery.push(("right-interval".into(), seg, c.clone()));
        let union = battery[2].1.union(&battery[5].1)?;
        battery.push(("half-union-ball".into(), union, c.clone()));
        let sparse = battery[3].1.difference(&ball_mask(grid, &c, T::of(0.2))?)?;
        battery.push(("hollow-interval".into(), sparse, c.clone()));
        battery.push((
            "left-interval".into(),
            box_mask(grid, &[c[0] - T::of(0.8)], &[c[0] - T::of(0.05)])?
                .with_kind(RegionKind::Arbitrary),
            c.clone(),
        ));
    }
    Ok(battery)
}

/// Everything runnable on the given configuration, with modest instance
/// counts: the batch-runner entry point. The Wiener equivalence battery
/// is included only when the grid can hold `B(center, 2)`.
pub fn run_all<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<(ConstantEstimates<T>, Vec<CheckReport>)> {
    let grid = p.grid();
    let est = estimate_constants(p, w, 100, seed)?;
    let mut reports = vec![
        super::check_outer_measure(p, w, seed, 24, opts)?,
        super::check_choquet(p, w, seed, 8, opts)?,
        super::check_ball_bounds(p, w, &standard_radii(grid), &est, opts)?,
        super::check_annulus_bound(p, w, &standard_annuli(grid), &est, opts)?,
        super::check_capacity_comparison(
            p,
            w,
            &standard_comparison_instances(grid, 5)?,
            &est,
            opts,
        )?,
        super::check_nested_domain_sum(p, w, &standard_nested_chains(grid, 3)?, opts)?,
    ];

    let center = grid_center(grid);
    let h = grid.min_spacing();
    let fits = ball_fits(grid, &center, T::of(2.0) + T::of(2.0) * h);
    let deep_enough = T::of(2.0) * T::of(2f64.powi(-3)) >= T::of(4.0) * h;
    if fits && deep_enough {
        let battery = standard_wiener_battery(grid, &center)?;
        reports.push(super::check_wiener_equivalence(p, w, &battery, 3, opts)?);
    } else {
        let mut skipped = CheckReport::new("wiener_equivalence");
        skipped.skip(
            "battery".into(),
            "grid cannot hold B(center, 2) at adequate depth".into(),
        );
        reports.push(skipped);
    }
    Ok((est, reports))
}

/// Convenience wrapper running the default `SolverOptions`.
pub fn run_all_default<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    seed: u64,
) -> Result<(ConstantEstimates<T>, Vec<CheckReport>)> {
    run_all(p, w, seed, &SolverOptions::default())
}
