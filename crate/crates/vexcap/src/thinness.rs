//! Wiener-type sums and integrals of dyadic capacity-density ratios, and
//! the thin/thick classification they support.
//!
//! Any finite computation of the (tail) Wiener criterion is an
//! extrapolation; the verdict here fits a geometric ratio to the last few
//! scale increments and is reported as inconclusive whenever the fit, the
//! integral route, or a two-scale deepening disagrees.

use std::io::Write;

use rayon::prelude::*;

use crate::capacity::relative_capacity;
use crate::error::{Error, Result};
use crate::field::{ExponentField, WeightField};
use crate::mask::{ball_mask, RegionKind, RegionMask};
use crate::measure::ball_fits;
use crate::scalar::Scalar;
use crate::solver::SolverOptions;
use crate::util::geometric_tail_ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Thin,
    Thick,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Thin => write!(f, "thin"),
            Verdict::Thick => write!(f, "thick"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// One dyadic scale of a Wiener profile.
#[derive(Clone, Debug)]
pub struct ScaleEntry<T> {
    pub level: usize,
    pub radius: T,
    pub cap_num: T,
    pub cap_den: T,
    pub ratio: T,
    pub increment: T,
    pub partial_sum: T,
}

/// Per-scale capacity ratios, their partial sums, the log-quadrature
/// integral estimate, and the fitted verdict.
#[derive(Clone, Debug)]
pub struct WienerProfile<T> {
    pub center: Vec<T>,
    /// The exponent `1 / (p(x0) - 1)` applied to every ratio.
    pub exponent_at_center: T,
    pub scales: Vec<ScaleEntry<T>>,
    pub integral_estimate: Option<T>,
    /// Integral contribution of each dyadic block `[2^-(d+1), 2^-d]`.
    pub integral_blocks: Vec<T>,
    pub verdict: Verdict,
    pub truncation_note: String,
}

impl<T: Scalar> WienerProfile<T> {
    pub fn wiener_sum(&self) -> T {
        self.scales
            .last()
            .map(|s| s.partial_sum)
            .unwrap_or_else(T::zero)
    }

    /// CSV dump: `i, r_i, cap_num, cap_den, ratio, increment, partial_sum`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,r_i,cap_num,cap_den,ratio,increment,partial_sum")?;
        for s in &self.scales {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.level,
                s.radius.as_f64(),
                s.cap_num.as_f64(),
                s.cap_den.as_f64(),
                s.ratio.as_f64(),
                s.increment.as_f64(),
                s.partial_sum.as_f64()
            )?;
        }
        Ok(())
    }

    /// The one-line verdict record.
    pub fn verdict_line(&self) -> String {
        format!(
            "verdict={} sum={} integral={} ratio_exponent={} note={}",
            self.verdict,
            self.wiener_sum().as_f64(),
            self.integral_estimate
                .map(|v| v.as_f64())
                .unwrap_or(f64::NAN),
            self.exponent_at_center.as_f64(),
            self.truncation_note
        )
    }
}

fn check_scale_fits<T: Scalar>(p: &ExponentField<T>, center: &[T], r: T) -> Result<()> {
    let grid = p.grid();
    let h = grid.min_spacing();
    if r < T::of(2.0) * h {
        return Err(Error::Degenerate(format!(
            "radius {} below two grid cells (h = {})",
            r.as_f64(),
            h.as_f64()
        )));
    }
    if !ball_fits(grid, center, T::of(2.0) * r) {
        return Err(Error::Degenerate(format!(
            "ball of radius {} around the profile center leaves the grid",
            (T::of(2.0) * r).as_f64()
        )));
    }
    Ok(())
}

/// Capacity-density ratio of `a` at one scale:
/// `cap(a and B(x0, r), B(x0, 2r)) / cap(B(x0, r), B(x0, 2r))`.
/// Returns `(ratio, numerator, denominator)`.
pub fn wiener_ratio<T: Scalar>(
    a: &RegionMask,
    center: &[T],
    r: T,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    opts: &SolverOptions<T>,
) -> Result<(T, T, T)> {
    check_scale_fits(p, center, r)?;
    let grid = p.grid();
    let ball = ball_mask(grid, center, r)?;
    let omega = ball_mask(grid, center, T::of(2.0) * r)?.with_kind(RegionKind::Open);
    let plate = a.intersect(&ball)?.with_kind(RegionKind::Compact);

    let den = relative_capacity(&ball, &omega, p, w, opts)?;
    if !den.converged {
        return Err(Error::NonConvergence {
            iterations: den.iterations,
            best: den.value.as_f64(),
        });
    }
    if !(den.value > T::zero()) {
        return Err(Error::Degenerate(
            "denominator condenser has zero capacity; grid pathology".into(),
        ));
    }

    let num = if plate.is_empty() {
        T::zero()
    } else {
        let num = relative_capacity(&plate, &omega, p, w, opts)?;
        if !num.converged {
            return Err(Error::NonConvergence {
                iterations: num.iterations,
                best: num.value.as_f64(),
            });
        }
        num.value
    };
    // energies are sums of powers so the numerator cannot go negative,
    // but clamp to keep the ratio in range regardless
    let num = num.max(T::zero());
    Ok((num / den.value, num, den.value))
}

struct ScaleData<T> {
    radius: T,
    num: T,
    den: T,
}

/// Thick when the last few increments all stay at or above this.
const THICK_FLOOR: f64 = 1e-2;
/// Thin when the geometric fit predicts a tail below this.
const THIN_TAIL: f64 = 1e-3;
const FIT_WINDOW: usize = 5;

fn verdict_from_increments<T: Scalar>(increments: &[T]) -> Verdict {
    if increments.is_empty() {
        return Verdict::Inconclusive;
    }
    let window = FIT_WINDOW.min(increments.len());
    let tail = &increments[increments.len() - window..];
    if tail.iter().all(|&d| d >= T::of(THICK_FLOOR)) {
        return Verdict::Thick;
    }
    if tail.iter().all(|&d| d <= T::of(1e-12)) {
        return Verdict::Thin;
    }
    match geometric_tail_ratio(increments, window) {
        Some(q) if q < T::one() => {
            let last = *increments.last().unwrap();
            let tail_bound = last * q / (T::one() - q);
            if tail_bound < T::of(THIN_TAIL) {
                Verdict::Thin
            } else {
                Verdict::Inconclusive
            }
        }
        _ => Verdict::Inconclusive,
    }
}

fn scales_to_profile<T: Scalar>(inv_exponent: T, data: &[ScaleData<T>]) -> Vec<ScaleEntry<T>> {
    let mut out = Vec::with_capacity(data.len());
    let mut partial = T::zero();
    for (i, d) in data.iter().enumerate() {
        let ratio = if d.den > T::zero() {
            (d.num / d.den).max(T::zero())
        } else {
            T::zero()
        };
        let increment = if ratio > T::zero() {
            ratio.powf(inv_exponent)
        } else {
            T::zero()
        };
        partial = partial + increment;
        out.push(ScaleEntry {
            level: i,
            radius: d.radius,
            cap_num: d.num,
            cap_den: d.den,
            ratio,
            increment,
            partial_sum: partial,
        });
    }
    out
}

/// Wiener sum truncated at `i_max`: partial sums of
/// `ratio(2^-i)^(1/(p(x0)-1))` for `i = 0..=i_max`, with the fitted
/// verdict. Requires at least four cells across the smallest ball.
pub fn wiener_sum<T: Scalar>(
    a: &RegionMask,
    center: &[T],
    p: &ExponentField<T>,
    w: &WeightField<T>,
    i_max: usize,
    opts: &SolverOptions<T>,
) -> Result<WienerProfile<T>> {
    let h = p.grid().min_spacing();
    let r_smallest = T::of(2f64.powi(-(i_max as i32)));
    if T::of(2.0) * r_smallest < T::of(4.0) * h {
        return Err(Error::Degenerate(format!(
            "i_max = {i_max} puts fewer than 4 cells across the smallest ball (h = {})",
            h.as_f64()
        )));
    }
    check_scale_fits(p, center, T::one())?;

    let radii: Vec<T> = (0..=i_max).map(|i| T::of(2f64.powi(-(i as i32)))).collect();
    let solved: Vec<Result<ScaleData<T>>> = radii
        .par_iter()
        .map(|&r| {
            let (_, num, den) = wiener_ratio(a, center, r, p, w, opts)?;
            Ok(ScaleData {
                radius: r,
                num,
                den,
            })
        })
        .collect();
    let mut data = Vec::with_capacity(solved.len());
    for s in solved {
        data.push(s?);
    }

    let exponent = p.at_nearest_node(center);
    let inv = T::one() / (exponent - T::one());
    let scales = scales_to_profile(inv, &data);
    let increments: Vec<T> = scales.iter().map(|s| s.increment).collect();
    let verdict = verdict_from_increments(&increments);
    Ok(WienerProfile {
        center: center.to_vec(),
        exponent_at_center: inv,
        scales,
        integral_estimate: None,
        integral_blocks: vec![],
        verdict,
        truncation_note: format!(
            "dyadic sum truncated at i_max = {i_max} (r = {}); tail extrapolated geometrically",
            r_smallest.as_f64()
        ),
    })
}

/// Wiener-type integral over `[r_min, 1]` by composite midpoint
/// quadrature in `ln r`, 8 points per dyadic decade. Returns the estimate
/// and the per-decade block contributions (coarsest first).
pub fn wiener_integral<T: Scalar>(
    a: &RegionMask,
    center: &[T],
    p: &ExponentField<T>,
    w: &WeightField<T>,
    r_min: T,
    opts: &SolverOptions<T>,
) -> Result<(T, Vec<T>)> {
    let h = p.grid().min_spacing();
    if r_min < T::of(2.0) * h {
        return Err(Error::Degenerate(format!(
            "integral truncation r_min = {} below two grid cells",
            r_min.as_f64()
        )));
    }
    if !(r_min < T::one()) {
        return Err(Error::Degenerate("r_min must be below 1".into()));
    }
    check_scale_fits(p, center, T::one())?;
    let exponent = p.at_nearest_node(center);
    let inv = T::one() / (exponent - T::one());

    let decades = (-r_min.as_f64().log2()).ceil() as usize;
    const POINTS_PER_DECADE: usize = 8;

    // midpoints in ln r over each dyadic block [2^-(d+1), 2^-d], clipped
    // at r_min
    let mut jobs: Vec<(usize, T, T)> = Vec::new();
    for d in 0..decades {
        let top = T::of(2f64.powi(-(d as i32)));
        let bottom = T::of(2f64.powi(-(d as i32 + 1))).max(r_min);
        if !(bottom < top) {
            continue;
        }
        let u_hi = top.ln();
        let u_lo = bottom.ln();
        let du = (u_hi - u_lo) / T::of(POINTS_PER_DECADE as f64);
        for k in 0..POINTS_PER_DECADE {
            let u = u_lo + (T::of(k as f64) + T::of(0.5)) * du;
            jobs.push((d, u.exp(), du));
        }
    }

    let evals: Vec<Result<(usize, T)>> = jobs
        .par_iter()
        .map(|&(d, r, du)| {
            let (ratio, _, _) = wiener_ratio(a, center, r, p, w, opts)?;
            let g = if ratio > T::zero() {
                ratio.powf(inv)
            } else {
                T::zero()
            };
            Ok((d, g * du))
        })
        .collect();

    let mut blocks = vec![T::zero(); decades];
    for e in evals {
        let (d, v) = e?;
        blocks[d] = blocks[d] + v;
    }
    let total = blocks.iter().copied().fold(T::zero(), |s, b| s + b);
    Ok((total, blocks))
}

/// Runs both the dyadic sum and the integral route, cross-checks their
/// verdicts, and demands stability under a two-scale truncation. Any
/// disagreement is reported as inconclusive.
pub fn classify_thinness<T: Scalar>(
    a: &RegionMask,
    center: &[T],
    p: &ExponentField<T>,
    w: &WeightField<T>,
    i_max: usize,
    opts: &SolverOptions<T>,
) -> Result<WienerProfile<T>> {
    let mut profile = wiener_sum(a, center, p, w, i_max, opts)?;

    // integral route, truncated consistently with the sum
    let r_min = T::of(2f64.powi(-(i_max as i32 + 1)));
    let (integral, blocks) = wiener_integral(a, center, p, w, r_min, opts)?;
    profile.integral_estimate = Some(integral);
    profile.integral_blocks = blocks.clone();
    let integral_verdict = verdict_from_increments(&blocks);

    // stability: the sum verdict must not flip when two scales are dropped
    let shallow_verdict = if i_max >= 2 {
        let increments: Vec<T> = profile.scales[..profile.scales.len() - 2]
            .iter()
            .map(|s| s.increment)
            .collect();
        verdict_from_increments(&increments)
    } else {
        profile.verdict
    };

    let sum_verdict = profile.verdict;
    profile.verdict = if sum_verdict == integral_verdict && sum_verdict == shallow_verdict {
        sum_verdict
    } else {
        Verdict::Inconclusive
    };
    profile.truncation_note = format!(
        "{}; integral truncated at r_min = {} (verdict {}), depth-stability verdict {}",
        profile.truncation_note,
        r_min.as_f64(),
        integral_verdict,
        shallow_verdict
    );
    Ok(profile)
}
