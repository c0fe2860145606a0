//! Relative backward error and the two bounds used to certify perturbed solves.

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, LinearOperator};
use crate::scalar::Scalar;

/// A backward error together with the quantities it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerrValue<T> {
    pub value: T,
    pub residual_norm: T,
    pub x_norm: T,
    pub opnorm_used: T,
}

impl<T: Scalar> BerrValue<T> {
    /// Assembles `residual_norm / (opnorm · x_norm)`.
    pub fn from_parts(residual_norm: T, x_norm: T, opnorm: T) -> Result<Self> {
        if !(opnorm > T::zero()) {
            return Err(Error::NonPositiveOpnorm(opnorm.to_f64_lossy()));
        }
        if x_norm == T::zero() {
            return Err(Error::UndefinedAtZero);
        }
        Ok(Self {
            value: residual_norm / (opnorm * x_norm),
            residual_norm,
            x_norm,
            opnorm_used: opnorm,
        })
    }
}

/// `‖Ax − b‖₂ / (opnorm · ‖x‖₂)`, with one application of `op`.
pub fn backward_error<T: Scalar>(
    op: &LinearOperator<T>,
    b: &[T],
    x: &[T],
    opnorm: T,
) -> Result<BerrValue<T>> {
    check_len(op.rows(), b.len())?;
    let mut r = op.apply(x)?;
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    BerrValue::from_parts(norm2(&r), norm2(x), opnorm)
}

/// Certified backward error for `A` from a backward error measured on some `Ã`
/// with `‖A − Ã‖₂ ≤ eps·‖A‖₂`: `(1 + eps)·berr + eps`.
pub fn composition_bound<T: Scalar>(berr_on_perturbed: T, eps: T) -> T {
    (T::one() + eps) * berr_on_perturbed + eps
}

/// Backward error implied by a relative forward error `eps` in the `A`-norm: `eps / (1 − eps)`.
pub fn forward_to_backward_bound<T: Scalar>(eps: T) -> Result<T> {
    if !(eps >= T::zero() && eps < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "forward error must lie in [0,1), got {eps}"
        )));
    }
    Ok(eps / (T::one() - eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_has_zero_berr() {
        let a = LinearOperator::diagonal(vec![2.0, 4.0]);
        assert_eq!(
            backward_error(&a, &[2.0, 2.0], &[1.0, 0.5], 4.0)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn identity_wrong_direction() {
        let a = LinearOperator::<f64>::identity(2);
        let e = backward_error(&a, &[1.0, 0.0], &[0.0, 1.0], 1.0).unwrap();
        assert!((e.value - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_arithmetic() {
        let a = LinearOperator::diagonal(vec![2.0, 1.0]);
        let e = backward_error(&a, &[2.0, 1.0], &[1.0, 0.0], 2.0).unwrap();
        assert_eq!(e.value, 0.5);
        assert_eq!(e.value, e.residual_norm / (e.opnorm_used * e.x_norm));
    }

    #[test]
    fn zero_iterate_and_bad_opnorm() {
        let a = LinearOperator::<f64>::identity(2);
        assert!(matches!(
            backward_error(&a, &[1.0, 0.0], &[0.0, 0.0], 1.0),
            Err(Error::UndefinedAtZero)
        ));
        assert!(matches!(
            backward_error(&a, &[1.0, 0.0], &[1.0, 0.0], 0.0),
            Err(Error::NonPositiveOpnorm(_))
        ));
        assert!(backward_error(&a, &[1.0], &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(composition_bound(0.0, 0.0), 0.0);
        assert!((composition_bound(0.01_f64, 0.001) - 0.01101).abs() < 1e-15);
        assert_eq!(forward_to_backward_bound(0.0).unwrap(), 0.0);
        assert_eq!(forward_to_backward_bound(0.5).unwrap(), 1.0);
        assert!(forward_to_backward_bound(1.0).is_err());
    }
}
