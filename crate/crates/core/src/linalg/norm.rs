use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::random::{gaussian_vec, rng};
use super::vector::{axpy_in_place, dot_unchecked, norm2, scale_in_place};
use super::LinearOperator;

pub const DEFAULT_NORM_REL_TOL: f64 = 1e-3;
pub const DEFAULT_NORM_MAX_ITER: usize = 300;

/// Lower estimate of `‖A‖₂` from power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate<T> {
    pub value: T,
    pub relative_tolerance: T,
    pub iterations_used: usize,
}

/// Power iteration on `A` (symmetric operators) or `AᵀA`, from a Gaussian start drawn with `seed`.
///
/// Every iterate is `‖A v‖₂` for a unit vector `v`, so the returned value never exceeds
/// `‖A‖₂`; the running maximum is reported, which makes the sequence non-decreasing.
/// Iteration stops once the relative increase drops below `rel_tol / 100`, or when the
/// start vector turns out to be an invariant direction.
pub fn estimate_spectral_norm<T: Scalar>(
    op: &LinearOperator<T>,
    rel_tol: T,
    max_iter: usize,
    seed: u64,
) -> Result<NormEstimate<T>> {
    estimate_with_history(op, rel_tol, max_iter, seed, |_| {})
}

pub(crate) fn estimate_with_history<T: Scalar>(
    op: &LinearOperator<T>,
    rel_tol: T,
    max_iter: usize,
    seed: u64,
    mut observe: impl FnMut(T),
) -> Result<NormEstimate<T>> {
    if !(rel_tol > T::zero() && rel_tol < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "rel_tol must lie in (0,1), got {rel_tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    let mut v: Vec<T> = gaussian_vec(&mut rng(seed), op.cols());
    let n0 = norm2(&v);
    scale_in_place(T::one() / n0, &mut v);

    let stop = rel_tol / T::lit(100.0);
    let mut w = vec![T::zero(); op.rows()];
    let mut best = T::zero();
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        op.apply_into(&v, &mut w)?;
        let est = norm2(&w);
        if it == 1 && est == T::zero() {
            return Err(Error::ZeroOperator);
        }
        let previous = best;
        best = best.max(est);
        observe(best);
        if est == T::zero() {
            break;
        }

        let next = if op.is_symmetric() {
            w.clone()
        } else {
            op.apply_adjoint(&w)?
        };
        // Invariant start direction: the estimate is already exact.
        let lambda = dot_unchecked(&next, &v);
        let mut resid = next.clone();
        axpy_in_place(-lambda, &v, &mut resid);
        if norm2(&resid) <= T::epsilon() * norm2(&next) {
            break;
        }
        if it > 1 && best - previous <= stop * best {
            break;
        }
        let nn = norm2(&next);
        v = next;
        scale_in_place(T::one() / nn, &mut v);
    }
    Ok(NormEstimate {
        value: best,
        relative_tolerance: rel_tol,
        iterations_used: iterations,
    })
}
