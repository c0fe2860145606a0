//! Euclidean vector kernels on plain slices.

use crate::error::{check_len, Result};
use crate::scalar::Scalar;

/// Overflow-safe Euclidean norm.
///
/// Plain sum of squares when it stays in range, otherwise the scaled
/// recurrence of LAPACK `dnrm2`.
pub fn norm2<T: Scalar>(v: &[T]) -> T {
    let ssq: T = v.iter().map(|&x| x * x).sum();
    if ssq.is_finite() && ssq >= T::min_positive_value() / T::epsilon() {
        return ssq.sqrt();
    }
    if ssq == T::zero() && v.iter().all(|&x| x == T::zero()) {
        return T::zero();
    }
    let mut scale = T::zero();
    let mut ssq = T::one();
    for &x in v {
        if x != T::zero() {
            let ax = x.abs();
            if scale < ax {
                let r = scale / ax;
                ssq = T::one() + ssq * r * r;
                scale = ax;
            } else {
                let r = ax / scale;
                ssq += r * r;
            }
        }
    }
    scale * ssq.sqrt()
}

/// Inner product `uᵀv`.
pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    check_len(u.len(), v.len())?;
    Ok(dot_unchecked(u, v))
}

/// Returns `a·u + v`.
pub fn axpy<T: Scalar>(a: T, u: &[T], v: &[T]) -> Result<Vec<T>> {
    check_len(u.len(), v.len())?;
    Ok(u.iter().zip(v).map(|(&ui, &vi)| a * ui + vi).collect())
}

#[inline]
pub(crate) fn dot_unchecked<T: Scalar>(u: &[T], v: &[T]) -> T {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

/// `y += a·x`
#[inline]
pub(crate) fn axpy_in_place<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn scale_in_place<T: Scalar>(a: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= a;
    }
}

/// Normalizes in place and returns the original norm.
#[inline]
pub(crate) fn normalize<T: Scalar>(x: &mut [T]) -> T {
    let n = norm2(x);
    if n > T::zero() {
        scale_in_place(T::one() / n, x);
    }
    n
}
