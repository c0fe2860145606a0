//! Scalar abstractions.
//!
//! [`Scalar`] is the floating-point type the solvers run in (`f32` or `f64`).
//! [`Field`] is the weaker bound used by the sign-only convergence tests in
//! [`crate::spectral`], which need no square roots and therefore also run in
//! exact rational arithmetic.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Real floating-point scalar.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent finite `f64`s at all.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Converts to `f64` for reporting and dense-oracle interop.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Unit roundoff `u` (half the machine epsilon).
    #[inline]
    fn unit_roundoff() -> Self {
        Self::epsilon() / Self::lit(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Ordered field: enough structure for LDLᵀ and dqds pivots.
pub trait Field: Num + Clone + PartialOrd + Neg<Output = Self> + Debug {}

impl<T> Field for T where T: Num + Clone + PartialOrd + Neg<Output = T> + Debug {}
