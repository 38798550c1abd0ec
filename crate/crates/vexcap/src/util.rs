//! Deterministic reductions and small numeric helpers.
//!
//! Floating-point sums over grid nodes are always taken in a fixed chunked
//! order so that repeated runs (and runs with different worker counts)
//! produce bit-identical results.

use crate::scalar::Scalar;

const CHUNK: usize = 4096;

/// Sum of `f(i)` over `0..n`, accumulated per fixed-size chunk and then
/// reduced in chunk order. Bit-deterministic for a given `n` and `f`.
pub fn sum_indexed<T: Scalar, F: Fn(usize) -> T>(n: usize, f: F) -> T {
    let mut total = T::zero();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let mut acc = T::zero();
        for i in start..end {
            acc = acc + f(i);
        }
        total = total + acc;
        start = end;
    }
    total
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    sum_indexed(a.len(), |i| a[i] * b[i])
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    sum_indexed(a.len(), |i| a[i] * a[i])
}

/// |t|^p with a fast path for the ubiquitous p = 2.
#[inline]
pub fn pow_abs<T: Scalar>(t: T, p: T) -> T {
    let a = t.abs();
    if p == T::of(2.0) {
        a * a
    } else {
        a.powf(p)
    }
}

/// Estimated decay ratio of the tail of a positive sequence: least-squares
/// fit of `ln x[i]` against `i` over the last `window` entries, returned as
/// the geometric ratio `q`. `None` when the tail is (numerically) zero or
/// the fit is meaningless.
pub fn geometric_tail_ratio<T: Scalar>(xs: &[T], window: usize) -> Option<T> {
    if xs.len() < window.max(2) {
        return None;
    }
    let tail = &xs[xs.len() - window..];
    let floor = T::of(1e-300);
    if tail.iter().any(|&x| x < T::zero()) {
        return None;
    }
    if tail.iter().all(|&x| x <= floor) {
        return Some(T::zero());
    }
    if tail.iter().any(|&x| x <= floor) {
        // mixed zero / nonzero tail: no stable fit
        return None;
    }
    let m = T::of(window as f64);
    let mut si = T::zero();
    let mut sy = T::zero();
    let mut sii = T::zero();
    let mut siy = T::zero();
    for (k, &x) in tail.iter().enumerate() {
        let i = T::of(k as f64);
        let y = x.ln();
        si = si + i;
        sy = sy + y;
        sii = sii + i * i;
        siy = siy + i * y;
    }
    let denom = m * sii - si * si;
    if denom == T::zero() {
        return None;
    }
    let slope = (m * siy - si * sy) / denom;
    Some(slope.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential() {
        let n = 10_000;
        let s: f64 = sum_indexed(n, |i| (i as f64).sin());
        let mut r = 0.0;
        // reference accumulated in the same chunk order
        let mut start = 0;
        while start < n {
            let end = (start + 4096).min(n);
            let mut acc = 0.0;
            for i in start..end {
                acc += (i as f64).sin();
            }
            r += acc;
            start = end;
        }
        assert_eq!(s, r);
    }

    #[test]
    fn geometric_fit_recovers_ratio() {
        let xs: Vec<f64> = (0..12).map(|i| 3.0 * 0.5f64.powi(i)).collect();
        let q = geometric_tail_ratio(&xs, 5).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geometric_fit_zero_tail() {
        let xs = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(geometric_tail_ratio(&xs, 5), Some(0.0));
    }
}
