//! Shifted Chebyshev machinery certifying the `3/(k²−1)` MINBERR rate without a solver.
//!
//! For even `ℓ`, `G(x) = (1 − T*_ℓ(x))/(2ℓ²)` satisfies `0 ≤ G(x) ≤ x` on `[0,1]`, and
//! the approximation error `xG(x)/(x − G(x))` is bounded by `3/(ℓ²−1)`. With
//! `x = sin²γ` the error equals `F_ℓ(γ)/ℓ²`, which is how it is evaluated here.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `T*_m(x) = T_m(2x − 1)` by the three-term recurrence.
pub fn shifted_cheb<T: Scalar>(m: usize, x: T) -> T {
    let y = T::lit(2.0) * x - T::one();
    let (mut prev, mut cur) = (T::one(), y);
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = T::lit(2.0) * y * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn require_even(ell: usize) -> Result<()> {
    if ell < 2 || !ell.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "ell must be an even integer >= 2, got {ell}"
        )));
    }
    Ok(())
}

/// `G(x) = (1 − T*_ℓ(x))/(2ℓ²)` for even `ℓ`.
pub fn g_of_x<T: Scalar>(ell: usize, x: T) -> Result<T> {
    require_even(ell)?;
    let l = T::from_count(ell);
    Ok((T::one() - shifted_cheb(ell, x)) / (T::lit(2.0) * l * l))
}

/// `ℓ sin γ − sin ℓγ`, by its Taylor series when `ℓγ` is small.
fn sine_gap<T: Scalar>(ell: usize, gamma: T) -> T {
    let l = T::from_count(ell);
    if l * gamma >= T::lit(0.5) {
        return l * gamma.sin() - (l * gamma).sin();
    }
    // Σ_{m≥1} (−1)^{m+1} ℓ(ℓ^{2m} − 1) γ^{2m+1}/(2m+1)!
    let g2 = gamma * gamma;
    let l2 = l * l;
    let mut sum = T::zero();
    let mut gpow = gamma; // γ^{2m+1}/(2m+1)!
    let mut lpow = T::one(); // ℓ^{2m}
    let mut sign = T::one();
    for m in 1..40 {
        let k = T::from_count(2 * m);
        gpow = gpow * g2 / (k * (k + T::one()));
        lpow *= l2;
        let term = sign * l * (lpow - T::one()) * gpow;
        sum += term;
        if term.abs() <= T::epsilon() * T::lit(1e-2) * sum.abs() {
            break;
        }
        sign = -sign;
    }
    sum
}

/// Supremum of [`f_ell`]: `3ℓ²/(ℓ²−1)`, its limit at `γ = 0`.
pub fn f_ell_limit<T: Scalar>(ell: usize) -> T {
    let l2 = T::from_count(ell * ell);
    T::lit(3.0) * l2 / (l2 - T::one())
}

/// `F_ℓ(γ) = ℓ² sin²γ sin²(ℓγ) / (ℓ² sin²γ − sin²(ℓγ))`, continuously extended at `γ = 0`.
pub fn f_ell<T: Scalar>(ell: usize, gamma: T) -> Result<T> {
    if ell < 2 {
        return Err(Error::InvalidParameter(format!(
            "ell must be at least 2, got {ell}"
        )));
    }
    if gamma == T::zero() {
        return Ok(f_ell_limit(ell));
    }
    let l = T::from_count(ell);
    let s = gamma.sin();
    let big = (l * gamma).sin();
    let a = l * s * big;
    let minus = sine_gap(ell, gamma);
    let plus = l * s + big;
    Ok((a / minus) * (a / plus))
}

/// `xG(x)/(x − G(x))` through `F_ℓ(γ)/ℓ²` with `x = sin²γ`; `3/(ℓ²−1)` at `x = 0`.
pub fn approx_error<T: Scalar>(ell: usize, x: T) -> Result<T> {
    require_even(ell)?;
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in [0,1], got {x}"
        )));
    }
    let gamma = x.sqrt().asin();
    let l = T::from_count(ell);
    Ok(f_ell(ell, gamma)? / (l * l))
}

/// `3/(ℓ²−1)`
pub fn approx_error_bound<T: Scalar>(ell: usize) -> T {
    T::lit(3.0) / (T::from_count(ell * ell) - T::one())
}

/// Grid on `[0,1]` for maximizing [`approx_error`]: `x = sin²γ` with
/// `γ = (π/2)·tᵖ`, `t = i/points`, clustering points near the supremum at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebEval {
    pub ell: usize,
    pub points: usize,
    pub clustering_exponent: i32,
}

impl ChebEval {
    pub fn new(ell: usize) -> Result<Self> {
        require_even(ell)?;
        Ok(Self {
            ell,
            points: 1_000_000,
            clustering_exponent: 3,
        })
    }

    /// `γ` of grid point `i` (`0 ≤ i ≤ points`).
    pub fn gamma(&self, i: usize) -> f64 {
        FRAC_PI_2 * (i as f64 / self.points as f64).powi(self.clustering_exponent)
    }

    /// Maximum of `approx_error` over the grid (the `x = 0` limit included) and its location `x`.
    pub fn max_approx_error(&self) -> Result<(f64, f64)> {
        require_even(self.ell)?;
        let l2 = (self.ell * self.ell) as f64;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=self.points {
            let gamma = self.gamma(i);
            let v = f_ell(self.ell, gamma)? / l2;
            if v > best.0 {
                best = (v, gamma.sin().powi(2));
            }
        }
        Ok(best)
    }
}
