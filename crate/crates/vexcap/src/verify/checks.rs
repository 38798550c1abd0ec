//! The individual check batteries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::capacity::{relative_capacity, relative_capacity_general, sobolev_capacity};
use crate::error::Result;
use crate::field::{ExponentField, WeightField};
use crate::grid::{GridDomain, MAX_DIM};
use crate::mask::{annulus_mask, ball_mask, box_mask, RegionKind, RegionMask};
use crate::measure::{ball_fits, lebesgue_measure, weighted_measure};
use crate::scalar::Scalar;
use crate::solver::SolverOptions;
use crate::thinness::{wiener_integral, wiener_sum};
use crate::verify::{solver_slack, CheckReport, ConstantEstimates, Provenance};

/// (n-1)-measure of the unit sphere in dimension n.
fn unit_sphere_measure<T: Scalar>(dim: usize) -> T {
    match dim {
        1 => T::of(2.0),
        2 => T::of(2.0 * std::f64::consts::PI),
        _ => T::of(4.0 * std::f64::consts::PI),
    }
}

fn per_instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Physical diameter of the mask's bounding box.
fn mask_bbox_diameter<T: Scalar>(grid: &GridDomain<T>, mask: &RegionMask) -> T {
    let dim = grid.dim();
    let mut lo = [usize::MAX; MAX_DIM];
    let mut hi = [0usize; MAX_DIM];
    for idx in mask.indices() {
        let m = grid.multi(idx);
        for a in 0..dim {
            lo[a] = lo[a].min(m[a]);
            hi[a] = hi[a].max(m[a]);
        }
    }
    let mut d2 = T::zero();
    for a in 0..dim {
        if lo[a] <= hi[a] {
            let len = T::of((hi[a] - lo[a]) as f64) * grid.spacing(a);
            d2 = d2 + len * len;
        }
    }
    d2.sqrt()
}

/// A random open outer region: a ball or a box comfortably inside the
/// grid.
fn random_omega<T: Scalar>(grid: &GridDomain<T>, rng: &mut ChaCha8Rng) -> RegionMask {
    let dim = grid.dim();
    let mut min_extent = f64::INFINITY;
    for a in 0..dim {
        min_extent = min_extent.min(grid.extent(a).as_f64());
    }
    let margin = 3.0 * grid.min_spacing().as_f64();
    loop {
        let mut center = Vec::with_capacity(dim);
        for a in 0..dim {
            let t: f64 = rng.random_range(0.38..0.62);
            center.push(T::of(grid.origin(a).as_f64() + t * grid.extent(a).as_f64()));
        }
        if rng.random_bool(0.5) {
            let r = T::of(rng.random_range(0.22..0.34) * min_extent);
            let fits = (0..dim).all(|a| {
                (center[a] - r).as_f64() >= grid.origin(a).as_f64() + margin
                    && (center[a] + r).as_f64()
                        <= (grid.origin(a) + grid.extent(a)).as_f64() - margin
            });
            if fits {
                if let Ok(m) = ball_mask(grid, &center, r) {
                    return m.with_kind(RegionKind::Open);
                }
            }
        } else {
            let mut lo = Vec::with_capacity(dim);
            let mut hi = Vec::with_capacity(dim);
            for a in 0..dim {
                let half = rng.random_range(0.18..0.3) * min_extent;
                lo.push(T::of(center[a].as_f64() - half));
                hi.push(T::of(center[a].as_f64() + half));
            }
            let fits = (0..dim).all(|a| {
                lo[a].as_f64() >= grid.origin(a).as_f64() + margin
                    && hi[a].as_f64() <= (grid.origin(a) + grid.extent(a)).as_f64() - margin
            });
            if fits {
                if let Ok(m) = box_mask(grid, &lo, &hi) {
                    return m.with_kind(RegionKind::Open);
                }
            }
        }
    }
}

/// The region plates may occupy: three erosions inside the outer region.
fn plate_core(omega: &RegionMask) -> RegionMask {
    omega.erode().erode().erode()
}

/// A random compact plate: a union of one or two balls centered at core
/// nodes, clipped to the core.
fn random_plate<T: Scalar>(
    grid: &GridDomain<T>,
    rng: &mut ChaCha8Rng,
    core: &RegionMask,
) -> RegionMask {
    let nodes: Vec<usize> = core.indices().collect();
    if nodes.is_empty() {
        return RegionMask::empty(grid, RegionKind::Compact);
    }
    let h = grid.min_spacing().as_f64();
    let span = mask_bbox_diameter(grid, core).as_f64().max(4.0 * h);
    let n_balls = rng.random_range(1..=2usize);
    let mut plate = RegionMask::empty(grid, RegionKind::Compact);
    for _ in 0..n_balls {
        let at = nodes[rng.random_range(0..nodes.len())];
        let c = grid.point(at);
        let r = T::of(rng.random_range(1.2 * h..(0.35 * span).max(1.6 * h)));
        if let Ok(b) = ball_mask(grid, &c[..grid.dim()], r) {
            plate = plate.union(&b).expect("same grid");
        }
    }
    plate
        .intersect(core)
        .expect("same grid")
        .with_kind(RegionKind::Compact)
}

enum OuterInstance<T> {
    Row {
        params: String,
        lhs: T,
        rhs: T,
        slack: T,
    },
}

/// Outer-measure battery: the empty set, monotonicity, strong
/// subadditivity and finite-family countable subadditivity on seeded
/// randomized condensers.
pub fn check_outer_measure<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    seed: u64,
    n: usize,
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let grid = p.grid();
    let outcomes: Vec<Result<OuterInstance<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = per_instance_rng(seed, i);
            let omega = random_omega(grid, &mut rng);
            let core = plate_core(&omega);
            match i % 4 {
                0 => {
                    // empty set: exactly zero
                    let empty = RegionMask::empty(grid, RegionKind::Compact);
                    let cap = relative_capacity(&empty, &omega, p, w, opts)?.value;
                    Ok(OuterInstance::Row {
                        params: format!("empty-set i={i}"),
                        lhs: cap,
                        rhs: T::zero(),
                        slack: T::zero(),
                    })
                }
                1 => {
                    // monotone in both arguments
                    let a2 = random_plate(grid, &mut rng, &core);
                    let clip = match core.indices().next() {
                        Some(first) => {
                            let c = grid.point(first);
                            ball_mask(grid, &c[..grid.dim()], T::of(0.2) * grid.diameter())
                                .map(|b| a2.intersect(&b).expect("same grid"))
                                .unwrap_or_else(|_| a2.clone())
                                .with_kind(RegionKind::Compact)
                        }
                        None => a2.clone(),
                    };
                    let omega1 = omega.dilate();
                    let c1 = relative_capacity(&clip, &omega1, p, w, opts)?.value;
                    let c2 = relative_capacity(&a2, &omega, p, w, opts)?.value;
                    Ok(OuterInstance::Row {
                        params: format!("monotone i={i}"),
                        lhs: c1,
                        rhs: c2,
                        slack: solver_slack(&[c1, c2]),
                    })
                }
                2 => {
                    // strong subadditivity
                    let k1 = random_plate(grid, &mut rng, &core);
                    let k2 = random_plate(grid, &mut rng, &core);
                    let union = k1.union(&k2)?;
                    let inter = k1.intersect(&k2)?;
                    let cu = relative_capacity(&union, &omega, p, w, opts)?.value;
                    let ci = relative_capacity(&inter, &omega, p, w, opts)?.value;
                    let c1 = relative_capacity(&k1, &omega, p, w, opts)?.value;
                    let c2 = relative_capacity(&k2, &omega, p, w, opts)?.value;
                    Ok(OuterInstance::Row {
                        params: format!("strong-subadd i={i}"),
                        lhs: cu + ci,
                        rhs: c1 + c2,
                        slack: solver_slack(&[cu, ci, c1, c2]),
                    })
                }
                _ => {
                    // finite-family subadditivity
                    let m = rng.random_range(2..=3usize);
                    let plates: Vec<RegionMask> = (0..m)
                        .map(|_| random_plate(grid, &mut rng, &core))
                        .collect();
                    let mut union = RegionMask::empty(grid, RegionKind::Compact);
                    for pl in &plates {
                        union = union.union(pl)?;
                    }
                    let cu = relative_capacity(&union, &omega, p, w, opts)?.value;
                    let mut sum = T::zero();
                    let mut parts = vec![cu];
                    for pl in &plates {
                        let c = relative_capacity(pl, &omega, p, w, opts)?.value;
                        sum = sum + c;
                        parts.push(c);
                    }
                    Ok(OuterInstance::Row {
                        params: format!("countable-subadd i={i} m={m}"),
                        lhs: cu,
                        rhs: sum,
                        slack: solver_slack(&parts),
                    })
                }
            }
        })
        .collect();

    let mut report = CheckReport::new("outer_measure");
    for o in outcomes {
        let OuterInstance::Row {
            params,
            lhs,
            rhs,
            slack,
        } = o?;
        report.record(params, lhs, rhs, slack);
    }
    Ok(report)
}

/// Limit batteries: decreasing compact chains and increasing set chains
/// that stabilize on the grid; the capacity of the limit must match the
/// limit of the capacities.
pub fn check_choquet<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    seed: u64,
    n: usize,
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let grid = p.grid();
    type Chain = Vec<RegionMask>;

    let build = |i: usize| -> Result<(String, Chain, RegionMask, bool)> {
        let mut rng = per_instance_rng(seed, i);
        let omega = random_omega(grid, &mut rng);
        let core = plate_core(&omega);
        let nodes: Vec<usize> = core.indices().collect();
        if nodes.is_empty() {
            let empty = RegionMask::empty(grid, RegionKind::Compact);
            return Ok((
                format!("limit-dec-degenerate i={i}"),
                vec![empty.clone(), empty.clone(), empty],
                omega,
                true,
            ));
        }
        let at = nodes[rng.random_range(0..nodes.len())];
        let c = grid.point(at);
        let center = &c[..grid.dim()];
        let h = grid.min_spacing();
        let span = mask_bbox_diameter(grid, &core) * T::of(0.5);
        match i % 4 {
            0 => {
                // constant chain
                let k = random_plate(grid, &mut rng, &core);
                Ok((
                    format!("limit-dec-const i={i}"),
                    vec![k.clone(), k.clone(), k],
                    omega,
                    true,
                ))
            }
            1 => {
                // balls shrinking onto a node, stabilized
                let r0 = span.max(T::of(4.0) * h);
                let rf = T::of(1.2) * h;
                let radii = [
                    r0,
                    rf + (r0 - rf) * T::of(0.5),
                    rf + (r0 - rf) * T::of(0.25),
                    rf,
                    rf,
                ];
                let mut chain = Vec::new();
                for r in radii {
                    chain.push(
                        ball_mask(grid, center, r)?
                            .intersect(&core)?
                            .with_kind(RegionKind::Compact),
                    );
                }
                Ok((format!("limit-dec-shrink i={i}"), chain, omega, true))
            }
            2 => {
                // growing balls, stabilized
                let rf = span.max(T::of(4.0) * h);
                let r0 = T::of(1.2) * h;
                let radii = [
                    r0,
                    r0 + (rf - r0) * T::of(0.5),
                    r0 + (rf - r0) * T::of(0.75),
                    rf,
                    rf,
                ];
                let mut chain = Vec::new();
                for r in radii {
                    chain.push(
                        ball_mask(grid, center, r)?
                            .intersect(&core)?
                            .with_kind(RegionKind::Compact),
                    );
                }
                Ok((format!("limit-inc-grow i={i}"), chain, omega, false))
            }
            _ => {
                // erosion exhaustion filling the interior of omega
                let chain: Vec<RegionMask> = [4usize, 3, 2, 1, 1]
                    .iter()
                    .map(|&k| {
                        let mut m = omega.clone();
                        for _ in 0..k {
                            m = m.erode();
                        }
                        m.with_kind(RegionKind::Compact)
                    })
                    .collect();
                Ok((format!("limit-inc-fill i={i}"), chain, omega, false))
            }
        }
    };

    struct ChainOutcome<T> {
        label: String,
        caps: Vec<T>,
        cap_limit_set: T,
        decreasing: bool,
    }

    let outcomes: Vec<Result<ChainOutcome<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (label, chain, omega, decreasing) = build(i)?;
            let mut caps = Vec::with_capacity(chain.len());
            for k in &chain {
                caps.push(relative_capacity(k, &omega, p, w, opts)?.value);
            }
            // the limit set: intersection or union over the chain
            let mut limit = chain[0].clone();
            for k in &chain[1..] {
                limit = if decreasing {
                    limit.intersect(k)?
                } else {
                    limit.union(k)?
                };
            }
            let cap_limit_set =
                relative_capacity(&limit.with_kind(RegionKind::Compact), &omega, p, w, opts)?.value;
            Ok(ChainOutcome {
                label,
                caps,
                cap_limit_set,
                decreasing,
            })
        })
        .collect();

    let mut report = CheckReport::new("choquet_limits");
    for o in outcomes {
        let o = o?;
        // monotonicity along the chain
        for win in o.caps.windows(2) {
            let (a, b) = (win[0], win[1]);
            let slack = solver_slack(&[a, b]);
            if o.decreasing {
                report.record(format!("{} step", o.label), b, a, slack);
            } else {
                report.record(format!("{} step", o.label), a, b, slack);
            }
        }
        // limit of capacities vs capacity of the limit set
        let last = *o.caps.last().unwrap();
        let gap = (last - o.cap_limit_set).abs();
        let slack = solver_slack(&[last, o.cap_limit_set]);
        report.record(format!("{} limit-gap", o.label), gap, T::zero(), slack);
    }
    Ok(report)
}

/// Two-sided ball bound: with the capacity >= 1 hypothesis the condenser
/// capacity of `(B_r, B_2r)` is squeezed between closed-form multiples of
/// the weighted ball measure; instances failing the hypothesis are routed
/// to the max{1,.} estimate instead.
pub fn check_ball_bounds<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    radii: &[T],
    est: &ConstantEstimates<T>,
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let grid = p.grid();
    let dim = grid.dim();
    let mut report = CheckReport::new("ball_bounds");
    report.constant("poincare_c", est.poincare_c, Provenance::EmpiricalFit);
    report.constant("embed_c1", est.embed_c1, Provenance::EmpiricalFit);
    report.constant("doubling_cd", est.doubling_cd, Provenance::EmpiricalFit);

    let mut centers: Vec<Vec<T>> = Vec::new();
    let center: Vec<T> = (0..dim)
        .map(|a| grid.origin(a) + grid.extent(a) * T::of(0.5))
        .collect();
    centers.push(center.clone());
    let shifted: Vec<T> = (0..dim)
        .map(|a| {
            let off = if a == 0 { T::of(0.09) } else { T::of(0.0) };
            grid.origin(a) + grid.extent(a) * (T::of(0.5) + off)
        })
        .collect();
    centers.push(shifted);

    let h = grid.min_spacing();
    let four = T::of(4.0);
    let p_plus = p.p_max();
    let p_minus = p.p_min();

    for (ci, c) in centers.iter().enumerate() {
        for &r in radii {
            let params = |what: &str| format!("{what} center#{ci} r={}", r.as_f64());
            if r < four * h {
                report.skip(params("ball"), format!("r below 4h (h = {})", h.as_f64()));
                continue;
            }
            if !ball_fits(grid, c, T::of(2.0) * r + T::of(2.0) * h) {
                report.skip(params("ball"), "doubled ball leaves the grid".into());
                continue;
            }
            let small = ball_mask(grid, c, r)?;
            let big = ball_mask(grid, c, T::of(2.0) * r)?.with_kind(RegionKind::Open);
            let cap = relative_capacity(&small, &big, p, w, opts)?.value;
            let mu_r = weighted_measure(&small, w);
            let mu_2r = weighted_measure(&big, w);

            if cap >= T::one() {
                // upper: cap <= 2^{p+} c_d max{r^{-p-}, r^{-p+}} mu(B_r)
                let c2 = T::of(2.0).powf(p_plus)
                    * est.doubling_cd
                    * r.powf(-p_minus).max(r.powf(-p_plus));
                report.record(
                    params("upper"),
                    cap,
                    c2 * mu_r,
                    solver_slack(&[cap, c2 * mu_r]),
                );
                // lower: mu(B_r) <= c diam(B_2r) c1 cap, diam = 4r
                let rhs = est.poincare_c * four * r * est.embed_c1 * cap;
                report.record(params("lower"), mu_r, rhs, solver_slack(&[cap, mu_r]));
            } else {
                // capacity below 1: the max{1, |grad f|} estimate
                let rhs = est.poincare_c * four * r * (mu_2r + cap);
                report.record(
                    params("trick"),
                    mu_r,
                    rhs,
                    solver_slack(&[cap, mu_r, mu_2r]),
                );
            }
        }
    }
    Ok(report)
}

/// Annulus lower bound: the unit-sphere measure is dominated by a
/// closed-form multiple of the condenser capacity `(B_r1, B_r2)`, under
/// the weight >= 1 and annulus-capacity >= 1 hypotheses.
pub fn check_annulus_bound<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    instances: &[(Vec<T>, T, T)],
    est: &ConstantEstimates<T>,
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let grid = p.grid();
    let dim = grid.dim();
    let mut report = CheckReport::new("annulus_lower_bound");
    report.constant("holder_ch", est.holder_ch, Provenance::EmpiricalFit);

    let omega_dim = unit_sphere_measure::<T>(dim);
    let q_plus = p.p_min() / (p.p_min() - T::one());
    let q_minus = p.p_max() / (p.p_max() - T::one());
    let weight_ok = w.values().iter().all(|&v| v >= T::one() - T::of(1e-12));

    for (i, (c, r1, r2)) in instances.iter().enumerate() {
        let params = |what: &str| format!("{what} i={i} r1={} r2={}", r1.as_f64(), r2.as_f64());
        if !weight_ok {
            report.skip(params("annulus"), "hypothesis weight >= 1 fails".into());
            continue;
        }
        if !ball_fits(grid, c, *r2 + T::of(2.0) * grid.min_spacing()) {
            report.skip(params("annulus"), "outer ball leaves the grid".into());
            continue;
        }
        let ann = annulus_mask(grid, c, *r1, *r2)?;
        let outer = ball_mask(grid, c, *r2)?.with_kind(RegionKind::Open);
        let hyp = relative_capacity_general(&ann, &outer, p, w, opts)?.value;
        if hyp < T::one() {
            report.skip(
                params("annulus"),
                format!("hypothesis annulus capacity {} below 1", hyp.as_f64()),
            );
            continue;
        }
        let inner = ball_mask(grid, c, *r1)?;
        let cap = relative_capacity(&inner, &outer, p, w, opts)?.value;
        let area = lebesgue_measure(&ann, grid);
        let exponent = T::of((1 - dim as i32) as f64);
        let base = r2.powf(exponent * q_plus).max(r2.powf(exponent * q_minus)) * area;
        let c_big =
            est.holder_ch * (base.powf(T::one() / q_plus)).max(base.powf(T::one() / q_minus));
        report.record(
            params("annulus"),
            omega_dim,
            c_big * cap,
            solver_slack(&[cap, omega_dim]),
        );
    }
    Ok(report)
}

/// One condenser instance for the capacity-comparison battery.
#[derive(Clone, Debug)]
pub struct ComparisonInstance<T> {
    pub label: String,
    pub plate: RegionMask,
    pub omega: RegionMask,
    /// Ball data for the two-sided form: the plate must sit inside
    /// `B(center, radius)`.
    pub center: Vec<T>,
    pub radius: T,
}

/// Comparison battery between the Sobolev capacity and the relative
/// capacity: the one-sided bound through `max{cap^{1/p+}, cap}` on
/// bounded domains, and the two-sided ball comparison under the
/// capacity >= 1 hypothesis.
pub fn check_capacity_comparison<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    instances: &[ComparisonInstance<T>],
    est: &ConstantEstimates<T>,
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let grid = p.grid();
    let mut report = CheckReport::new("capacity_comparison");
    report.constant("poincare_c", est.poincare_c, Provenance::EmpiricalFit);
    report.constant("embed_c1", est.embed_c1, Provenance::EmpiricalFit);
    let p_plus = p.p_max();
    let p_minus = p.p_min();

    for inst in instances {
        let label = &inst.label;
        if inst.plate.is_empty() {
            // both capacities vanish by convention
            report.record(format!("{label} empty"), T::zero(), T::zero(), T::zero());
            continue;
        }
        let sob = sobolev_capacity(&inst.plate, p, w, opts)?;
        let s = sob.value;

        // one-sided comparison on the bounded domain
        let rel = relative_capacity(&inst.plate, &inst.omega, p, w, opts)?.value;
        let diam = mask_bbox_diameter(grid, &inst.omega);
        let c_one = T::of(2.0) * T::one().max(est.poincare_c * diam * est.embed_c1);
        let rhs = c_one * rel.powf(T::one() / p_plus).max(rel);
        report.record(
            format!("{label} one-sided"),
            s,
            rhs,
            solver_slack(&[s, rel]),
        );

        // two-sided ball comparison
        let two_r = T::of(2.0) * inst.radius;
        if !ball_fits(grid, &inst.center, two_r + T::of(2.0) * grid.min_spacing()) {
            report.skip(
                format!("{label} two-sided"),
                "doubled ball leaves the grid".into(),
            );
            continue;
        }
        let ball2 = ball_mask(grid, &inst.center, two_r)?.with_kind(RegionKind::Open);
        let rel2 = relative_capacity(&inst.plate, &ball2, p, w, opts)?.value;
        if rel2 < T::one() {
            report.skip(
                format!("{label} two-sided"),
                format!("hypothesis capacity {} below 1", rel2.as_f64()),
            );
            continue;
        }
        let vol2 = lebesgue_measure(&ball_mask(grid, &inst.center, two_r)?, grid);
        let c1 = T::one() + est.poincare_c * inst.radius * (T::one() + vol2);
        let c2 = T::of(2.0).powf(T::of(2.0) * p_plus)
            * (T::one() + inst.radius.powf(-p_minus).max(inst.radius.powf(-p_plus)));
        report.record(
            format!("{label} two-sided-lower"),
            s,
            c1 * rel2,
            solver_slack(&[s, rel2]),
        );
        report.record(
            format!("{label} two-sided-upper"),
            rel2,
            c2 * s,
            solver_slack(&[s, rel2]),
        );

        // near-zero correlation: tiny relative capacity forces a tiny
        // Sobolev capacity through the same constant
        let eps = solver_slack(&[rel]);
        if rel <= eps {
            report.record(
                format!("{label} near-zero"),
                s,
                c_one * eps.powf(T::one() / p_plus),
                solver_slack(&[s]),
            );
        }
    }
    Ok(report)
}

/// One nested chain `A_1 in Omega_1 in A_2 in ... in Omega`.
#[derive(Clone, Debug)]
pub struct NestedChain {
    pub label: String,
    pub pairs: Vec<(RegionMask, RegionMask)>,
    pub omega: RegionMask,
}

/// Nested-domain summation: the capacity of the innermost plate in the
/// union domain is bounded by the negative-power combination of the
/// per-ring capacities.
pub fn check_nested_domain_sum<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    chains: &[NestedChain],
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("nested_domain_sum");
    let p_minus = p.p_min();
    let neg = T::one() - p_minus; // < 0
    for chain in chains {
        let mut terms = Vec::with_capacity(chain.pairs.len());
        for (a, omega) in &chain.pairs {
            terms.push(relative_capacity(a, omega, p, w, opts)?.value);
        }
        let lhs = relative_capacity(&chain.pairs[0].0, &chain.omega, p, w, opts)?.value;
        let slack = solver_slack(&[lhs, terms.iter().copied().fold(T::zero(), |s, t| s + t)]);
        if terms.iter().any(|&t| !(t > T::zero())) {
            // zero-term convention: the right side collapses to zero
            report.record(format!("{} zero-term", chain.label), lhs, T::zero(), slack);
            continue;
        }
        let inner_sum = terms
            .iter()
            .fold(T::zero(), |s, &t| s + t.powf(T::one() / neg));
        let rhs = inner_sum.powf(neg);
        report.record(chain.label.clone(), lhs, rhs, slack);
    }
    Ok(report)
}

/// Sum/integral equivalence of the Wiener aggregates: both truncated
/// consistently, a single global constant pair must cover the battery.
pub fn check_wiener_equivalence<T: Scalar>(
    p: &ExponentField<T>,
    w: &WeightField<T>,
    battery: &[(String, RegionMask, Vec<T>)],
    i_max: usize,
    opts: &SolverOptions<T>,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("wiener_equivalence");
    let r_min = T::of(2f64.powi(-(i_max as i32 + 1)));
    let tiny = T::of(1e-12);

    struct Member<T> {
        label: String,
        sum: T,
        integral: T,
    }

    let evaluated: Vec<Result<Member<T>>> = battery
        .par_iter()
        .map(|(label, mask, center)| {
            let profile = wiener_sum(mask, center, p, w, i_max, opts)?;
            let (integral, _) = wiener_integral(mask, center, p, w, r_min, opts)?;
            Ok(Member {
                label: label.clone(),
                sum: profile.wiener_sum(),
                integral,
            })
        })
        .collect();

    let mut ratios: Vec<(String, T)> = Vec::new();
    let mut members = Vec::new();
    for m in evaluated {
        members.push(m?);
    }
    for m in &members {
        if m.sum <= tiny && m.integral <= tiny {
            // trivially consistent
            report.record(
                format!("{} both-zero", m.label),
                T::zero(),
                T::zero(),
                T::zero(),
            );
        } else if m.integral <= tiny || m.sum <= tiny {
            // one side vanished: no finite constant covers it
            report.record(
                format!("{} one-sided-zero", m.label),
                T::one(),
                T::zero(),
                T::zero(),
            );
        } else {
            ratios.push((m.label.clone(), m.sum / m.integral));
        }
    }

    if !ratios.is_empty() {
        let c2 = ratios
            .iter()
            .map(|&(_, r)| r)
            .fold(T::neg_infinity(), T::max);
        let c1 = ratios.iter().map(|&(_, r)| r).fold(T::infinity(), T::min);
        report.constant("fitted_c1", c1, Provenance::EmpiricalFit);
        report.constant("fitted_c2", c2, Provenance::EmpiricalFit);
        for (label, r) in &ratios {
            report.record(
                format!("{label} ratio-in-band"),
                *r,
                c2,
                solver_slack(&[*r]),
            );
        }
        // global spread
        report.record("spread c2/c1".into(), c2 / c1, T::of(1e3), T::zero());
    }
    Ok(report)
}
