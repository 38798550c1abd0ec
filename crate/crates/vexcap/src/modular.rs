//! The weighted modular, the Luxemburg norm it induces, and their
//! first-order Sobolev versions.

use crate::error::{Error, Result};
use crate::field::{gradient, ExponentField, ScalarField, WeightField};
use crate::mask::RegionMask;
use crate::scalar::Scalar;
use crate::util::{pow_abs, sum_indexed};

fn check_grids<T: Scalar>(
    f: &ScalarField<T>,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    mask: Option<&RegionMask>,
) -> Result<()> {
    if f.grid() != p.grid() || f.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some(m) = mask {
        if !m.matches_grid(f.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// `sum over mask of |f(x)|^p(x) w(x) h^n`.
pub fn modular<T: Scalar>(
    f: &ScalarField<T>,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    mask: &RegionMask,
) -> Result<T> {
    check_grids(f, p, w, Some(mask))?;
    let vol = f.grid().cell_volume();
    let (fv, pv, wv) = (f.values(), p.values(), w.values());
    Ok(sum_indexed(fv.len(), |i| {
        if mask.contains(i) {
            pow_abs(fv[i], pv[i]) * wv[i]
        } else {
            T::zero()
        }
    }) * vol)
}

/// Luxemburg norm: the infimum of `lambda > 0` with
/// `modular(f / lambda) <= 1`, located by geometric bracketing and
/// bisection to a relative bracket width of 1e-10. The returned value
/// satisfies `modular(f / lambda) <= 1`.
pub fn luxemburg_norm<T: Scalar>(
    f: &ScalarField<T>,
    p: &ExponentField<T>,
    w: &WeightField<T>,
    mask: &RegionMask,
) -> Result<T> {
    check_grids(f, p, w, Some(mask))?;
    let rho = |lambda: T| -> T {
        let vol = f.grid().cell_volume();
        let (fv, pv, wv) = (f.values(), p.values(), w.values());
        sum_indexed(fv.len(), |i| {
            if mask.contains(i) {
                pow_abs(fv[i] / lambda, pv[i]) * wv[i]
            } else {
                T::zero()
            }
        }) * vol
    };

    let rho_one = rho(T::one());
    if rho_one.is_nan() {
        return Err(Error::NonFinite("modular at the initial bracket".into()));
    }
    if rho_one == T::zero() {
        // vanishing on the mask
        return Ok(T::zero());
    }

    let (mut lo, mut hi);
    if rho_one <= T::one() {
        hi = T::one();
        lo = T::one();
        // shrink until the modular exceeds 1
        loop {
            lo = lo * T::of(0.5);
            if lo < T::of(1e-300) {
                return Ok(T::zero());
            }
            if rho(lo) > T::one() {
                break;
            }
            hi = lo;
        }
    } else {
        lo = T::one();
        hi = T::one();
        loop {
            hi = hi * T::of(2.0);
            if !hi.is_finite() {
                return Err(Error::NonFinite("bracket for the Luxemburg norm".into()));
            }
            let r = rho(hi);
            if r.is_nan() {
                return Err(Error::NonFinite("modular at the initial bracket".into()));
            }
            if r <= T::one() {
                break;
            }
            lo = hi;
        }
    }

    let tol = T::of(1e-10);
    while hi - lo > tol * hi {
        let mid = (lo + hi) * T::of(0.5);
        if rho(mid) <= T::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// First-order modular over the full grid:
/// `modular(f) + modular(|grad f|)`.
pub fn sobolev_modular<T: Scalar>(
    f: &ScalarField<T>,
    p: &ExponentField<T>,
    w: &WeightField<T>,
) -> Result<T> {
    check_grids(f, p, w, None)?;
    let full = RegionMask::full(f.grid(), crate::mask::RegionKind::Arbitrary);
    let grad_mag = gradient(f).magnitude();
    Ok(modular(f, p, w, &full)? + modular(&grad_mag, p, w, &full)?)
}

/// First-order norm over the full grid: Luxemburg norm of `f` plus
/// Luxemburg norm of `|grad f|`.
pub fn sobolev_norm<T: Scalar>(
    f: &ScalarField<T>,
    p: &ExponentField<T>,
    w: &WeightField<T>,
) -> Result<T> {
    check_grids(f, p, w, None)?;
    let full = RegionMask::full(f.grid(), crate::mask::RegionKind::Arbitrary);
    let grad_mag = gradient(f).magnitude();
    Ok(luxemburg_norm(f, p, w, &full)? + luxemburg_norm(&grad_mag, p, w, &full)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_exponent, sample_weight, ExponentSpec, WeightSpec};
    use crate::grid::build_grid;
    use crate::mask::RegionKind;

    struct Setup {
        f: ScalarField<f64>,
        p: ExponentField<f64>,
        w: WeightField<f64>,
        full: RegionMask,
    }

    fn on_unit_interval(n: usize, p0: f64, f: impl Fn(f64) -> f64) -> Setup {
        let g = build_grid(1, &[0.0], &[1.0], &[n]).unwrap();
        let p = sample_exponent(&ExponentSpec::Constant(p0), &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let field = ScalarField::from_fn(g, |x| f(x[0])).unwrap();
        let full = RegionMask::full(&g, RegionKind::Arbitrary);
        Setup {
            f: field,
            p,
            w,
            full,
        }
    }

    #[test]
    fn modular_of_zero_and_one() {
        let s = on_unit_interval(101, 2.0, |_| 0.0);
        assert_eq!(modular(&s.f, &s.p, &s.w, &s.full).unwrap(), 0.0);

        let s = on_unit_interval(101, 3.5, |_| 1.0);
        let mu = crate::measure::weighted_measure(&s.full, &s.w);
        let rho = modular(&s.f, &s.p, &s.w, &s.full).unwrap();
        assert_eq!(rho, mu);
    }

    #[test]
    fn modular_constant_half() {
        // |0.5|^2 integrated over [0,1]
        let s = on_unit_interval(201, 2.0, |_| 0.5);
        let rho = modular(&s.f, &s.p, &s.w, &s.full).unwrap();
        assert!((rho - 0.25).abs() < 0.25 * 0.02);
    }

    #[test]
    fn luxemburg_norm_identity_example() {
        // f(x) = x, p = 2: norm = (int x^2)^(1/2) = 3^(-1/2)
        let s = on_unit_interval(8001, 2.0, |x| x);
        let norm = luxemburg_norm(&s.f, &s.p, &s.w, &s.full).unwrap();
        assert!(
            (norm - 1.0 / 3.0f64.sqrt()).abs() < 1e-4,
            "norm {norm} vs 3^(-1/2)"
        );
    }

    #[test]
    fn luxemburg_norm_of_zero() {
        let s = on_unit_interval(51, 2.0, |_| 0.0);
        assert_eq!(luxemburg_norm(&s.f, &s.p, &s.w, &s.full).unwrap(), 0.0);
    }

    #[test]
    fn sobolev_modular_linear() {
        // f = x on [0,1], p = 2: int x^2 + int 1 = 4/3
        let s = on_unit_interval(1001, 2.0, |x| x);
        let rho = sobolev_modular(&s.f, &s.p, &s.w).unwrap();
        assert!((rho - 4.0 / 3.0).abs() < 4.0 / 3.0 * 0.01, "got {rho}");
    }

    #[test]
    fn sobolev_norm_linear() {
        let s = on_unit_interval(2001, 2.0, |x| x);
        let norm = sobolev_norm(&s.f, &s.p, &s.w).unwrap();
        assert!(
            (norm - (1.0 / 3.0f64.sqrt() + 1.0)).abs() < 1e-3,
            "got {norm}"
        );
    }

    #[test]
    fn constant_exponent_consistency() {
        // p constant: norm = modular^(1/p) to high accuracy
        for p0 in [1.5, 2.0, 3.0, 4.5] {
            let s = on_unit_interval(301, p0, |x| 0.3 + (3.1 * x).sin().abs());
            let rho = modular(&s.f, &s.p, &s.w, &s.full).unwrap();
            let norm = luxemburg_norm(&s.f, &s.p, &s.w, &s.full).unwrap();
            let expected = rho.powf(1.0 / p0);
            assert!(
                ((norm - expected) / expected).abs() < 1e-8,
                "p = {p0}: {norm} vs {expected}"
            );
        }
    }

    #[test]
    fn unit_ball_property() {
        let g = build_grid::<f64>(2, &[0.0, 0.0], &[1.0, 1.0], &[33, 33]).unwrap();
        let spec = ExponentSpec::BumpBlend {
            p_center: 3.0,
            p_outside: 1.8,
            center: vec![0.5, 0.5],
            radius: 0.4,
        };
        let p = sample_exponent(&spec, &g).unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let full = RegionMask::full(&g, RegionKind::Arbitrary);
        let f = ScalarField::from_fn(g, |x| 0.2 + (7.0 * x[0] + 3.0 * x[1]).sin().abs()).unwrap();
        let norm = luxemburg_norm(&f, &p, &w, &full).unwrap();
        let at_norm = f.map(|v| v / norm);
        let below = f.map(|v| v / (0.99 * norm));
        assert!(modular(&at_norm, &p, &w, &full).unwrap() <= 1.0 + 1e-9);
        assert!(modular(&below, &p, &w, &full).unwrap() > 1.0);
    }

    #[test]
    fn truncation_monotonicity() {
        let g = build_grid::<f64>(1, &[0.0], &[1.0], &[101]).unwrap();
        let p = sample_exponent(
            &ExponentSpec::LogAffine {
                base: 1.7,
                amplitude: 1.1,
                center: vec![0.3],
            },
            &g,
        )
        .unwrap();
        let w = sample_weight(&WeightSpec::Constant(1.0), &g, &p).unwrap();
        let f = ScalarField::from_fn(g, |x| 2.5 * (6.0 * x[0]).sin()).unwrap();
        let t = f.truncate_at_one();
        let rho_t = sobolev_modular(&t, &p, &w).unwrap();
        let rho_f = sobolev_modular(&f, &p, &w).unwrap();
        assert!(rho_t <= rho_f);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let s = on_unit_interval(11, 2.0, |x| x);
        let other = build_grid::<f64>(1, &[0.0], &[1.0], &[21]).unwrap();
        let f2 = ScalarField::constant(other, 1.0);
        assert!(matches!(
            modular(&f2, &s.p, &s.w, &s.full),
            Err(Error::GridMismatch)
        ));
    }
}
