//! Small banded kernels behind MINBERR: O(1) convergence tests and inverse iteration.
//!
//! [`CholTest`] and [`DqdsTest`] decide `σ_min(M) < ε` for a growing upper band
//! matrix `M` from sign information only, so they are generic over [`Field`] and
//! can be run in exact rational arithmetic. Everything that needs a square root
//! is restricted to [`Scalar`].

use crate::error::{check_len, Error, Result};
use crate::linalg::random::{gaussian_vec, rng};
use crate::linalg::vector::{norm2, scale_in_place};
use crate::linalg::DenseMatrix;
use crate::scalar::{Field, Scalar};

/// Square upper-triangular band matrix with at most two superdiagonals, stored by column.
///
/// Column `j` is `[M(j−2, j), M(j−1, j), M(j, j)]` (0-based), entries outside the
/// matrix are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBand<T> {
    bandwidth: usize,
    columns: Vec<[T; 3]>,
}

impl<T: Field> UpperBand<T> {
    /// Empty band with `bandwidth` (1 or 2) superdiagonals.
    pub fn with_bandwidth(bandwidth: usize) -> Self {
        assert!(bandwidth <= 2, "bandwidth {bandwidth} not supported");
        Self {
            bandwidth,
            columns: Vec::new(),
        }
    }

    /// Appends a column given its superdiagonal entries (farthest first) and diagonal.
    pub fn push_column(&mut self, supers: &[T], diag: T) {
        assert_eq!(
            supers.len(),
            self.bandwidth,
            "expected {} superdiagonal entries",
            self.bandwidth
        );
        let j = self.columns.len();
        let mut col = [T::zero(), T::zero(), diag];
        for (s, v) in supers.iter().rev().enumerate() {
            // s = 0 is the first superdiagonal.
            if s < j {
                col[1 - s] = v.clone();
            }
        }
        self.columns.push(col);
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Column `j` (0-based) as `[M(j−2, j), M(j−1, j), M(j, j)]`.
    pub fn column(&self, j: usize) -> &[T; 3] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i > j || j - i > 2 {
            return T::zero();
        }
        self.columns[j][2 - (j - i)].clone()
    }

    pub fn diagonal(&self, j: usize) -> T {
        self.columns[j][2].clone()
    }

    /// Leading `k × k` block.
    pub fn leading(&self, k: usize) -> Self {
        Self {
            bandwidth: self.bandwidth,
            columns: self.columns[..k].to_vec(),
        }
    }

    /// `M v`
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        let mut out = vec![T::zero(); n];
        for (j, col) in self.columns.iter().enumerate() {
            for (t, m) in col.iter().enumerate() {
                if let Some(i) = (j + t).checked_sub(2) {
                    out[i] = out[i].clone() + m.clone() * v[j].clone();
                }
            }
        }
        out
    }

    /// `Mᵀ v`
    pub fn matvec_t(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim());
        self.columns
            .iter()
            .enumerate()
            .map(|(j, col)| {
                col.iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (t, m)| match (j + t).checked_sub(2) {
                        Some(i) => acc + m.clone() * v[i].clone(),
                        None => acc,
                    })
            })
            .collect()
    }
}

impl<T: Scalar> UpperBand<T> {
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    fn solve_with(
        &self,
        rhs: &[T],
        transposed: bool,
        diag_of: impl Fn(usize) -> T,
    ) -> Result<Vec<T>> {
        check_len(self.dim(), rhs.len())?;
        let n = self.dim();
        let mut z = rhs.to_vec();
        if transposed {
            // Mᵀ is lower triangular: forward substitution.
            for j in 0..n {
                let [s2, s1, _] = self.columns[j];
                let mut acc = z[j];
                if j >= 1 {
                    acc -= s1 * z[j - 1];
                }
                if j >= 2 {
                    acc -= s2 * z[j - 2];
                }
                let d = diag_of(j);
                if d == T::zero() {
                    return Err(Error::SingularBand(j));
                }
                z[j] = acc / d;
            }
        } else {
            for j in (0..n).rev() {
                let mut acc = z[j];
                if j + 1 < n {
                    acc -= self.columns[j + 1][1] * z[j + 1];
                }
                if j + 2 < n {
                    acc -= self.columns[j + 2][0] * z[j + 2];
                }
                let d = diag_of(j);
                if d == T::zero() {
                    return Err(Error::SingularBand(j));
                }
                z[j] = acc / d;
            }
        }
        Ok(z)
    }
}

/// Solves `M z = rhs` (or `Mᵀ z = rhs`) by substitution in O(k).
pub fn banded_upper_solve<T: Scalar>(
    view: &UpperBand<T>,
    rhs: &[T],
    transposed: bool,
) -> Result<Vec<T>> {
    view.solve_with(rhs, transposed, |j| view.columns[j][2])
}

/// Outcome of one convergence-test step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestOutcome {
    Continue,
    Converged,
}

/// Incremental LDLᵀ factorization of the pentadiagonal `MᵀM − ε²I`.
///
/// A non-positive pivot appears exactly when `σ_min` of the leading block drops below `ε`.
#[derive(Debug, Clone)]
pub struct CholTest<T> {
    eps_sq: T,
    /// Last two columns of `M`, newest last.
    prev_cols: [[T; 3]; 2],
    /// Last three pivots of `D`, newest last.
    pivots: [T; 3],
    /// Newest row of `L`: `[L(k, k−2), L(k, k−1)]`.
    last_row: [T; 2],
    k: usize,
    converged: bool,
}

impl<T: Field> CholTest<T> {
    pub fn new(eps_sq: T) -> Self {
        let z = || [T::zero(), T::zero(), T::zero()];
        Self {
            eps_sq,
            prev_cols: [z(), z()],
            pivots: z(),
            last_row: [T::zero(), T::zero()],
            k: 0,
            converged: false,
        }
    }

    /// Adds column `k` of `M` as `[M(k−2,k), M(k−1,k), M(k,k)]`.
    pub fn step(&mut self, col: [T; 3]) -> TestOutcome {
        if self.converged {
            return TestOutcome::Converged;
        }
        let k = self.k;
        let [c2, c1, c0] = col.clone();
        let [pa, pb] = self.prev_cols.clone();
        let [_, d2, d1] = self.pivots.clone();

        // Entries of G = MᵀM − ε²I in column k; columns overlap on at most two rows.
        let g2 = pa[2].clone() * c2.clone();
        let g1 = pb[1].clone() * c2.clone() + pb[2].clone() * c1.clone();
        let g0 = c2.clone() * c2 + c1.clone() * c1 + c0.clone() * c0 - self.eps_sq.clone();

        let l2 = if k >= 2 { g2 / d2.clone() } else { T::zero() };
        let l1 = if k >= 1 {
            (g1 - l2.clone() * self.last_row[1].clone() * d2.clone()) / d1.clone()
        } else {
            T::zero()
        };
        let pivot =
            g0 - l2.clone() * l2.clone() * d2.clone() - l1.clone() * l1.clone() * d1.clone();

        self.last_row = [l2, l1];
        self.prev_cols = [pb, col];
        self.pivots = [d2, d1, pivot.clone()];
        self.k += 1;
        if pivot <= T::zero() {
            self.converged = true;
            TestOutcome::Converged
        } else {
            TestOutcome::Continue
        }
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    /// Number of columns absorbed.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Newest pivot `D(k, k)`.
    pub fn last_pivot(&self) -> T {
        self.pivots[2].clone()
    }
}

impl<T: Scalar> CholTest<T> {
    /// Convenience constructor from `ε`.
    pub fn with_eps(eps: T) -> Self {
        Self::new(eps * eps)
    }

    /// Newest column of the Cholesky factor `R` (`RᵀR = MᵀM − ε²I`) as
    /// `[R(k−2,k), R(k−1,k), R(k,k)]`. Only meaningful while not converged.
    pub fn factor_column(&self) -> [T; 3] {
        let [d2, d1, d0] = self.pivots;
        let [l2, l1] = self.last_row;
        let r = |d: T| d.max(T::zero()).sqrt();
        [l2 * r(d2), l1 * r(d1), r(d0)]
    }
}

/// Single dqds step on the squared entries of an upper bidiagonal matrix.
///
/// With `p_k` the squared diagonal and `e_{k−1}` the squared superdiagonal of column `k`,
/// the carry `d` stays positive exactly while `σ_min > ε`.
#[derive(Debug, Clone)]
pub struct DqdsTest<T> {
    eps_sq: T,
    d: Option<T>,
    converged: bool,
}

impl<T: Field> DqdsTest<T> {
    pub fn new(eps_sq: T) -> Self {
        Self {
            eps_sq,
            d: None,
            converged: false,
        }
    }

    /// Absorbs column `k`: `d = p₁ − ε²` at `k = 1`, else `d ← d·p_k/(d + e_{k−1}) − ε²`.
    pub fn step(&mut self, p: T, e: T) -> TestOutcome {
        if self.converged {
            return TestOutcome::Converged;
        }
        let d = match self.d.take() {
            None => p - self.eps_sq.clone(),
            Some(d) => {
                let p_hat = d.clone() + e;
                d * p / p_hat - self.eps_sq.clone()
            }
        };
        self.converged = d <= T::zero();
        self.d = Some(d);
        if self.converged {
            TestOutcome::Converged
        } else {
            TestOutcome::Continue
        }
    }

    pub fn carry(&self) -> Option<T> {
        self.d.clone()
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }
}

impl<T: Scalar> DqdsTest<T> {
    pub fn with_eps(eps: T) -> Self {
        Self::new(eps * eps)
    }
}

/// Inverse-iteration step count `ℓ = ⌈2.23·ln(k/δ²)⌉` (at least 1).
pub fn inverse_iteration_steps(k: usize, delta: f64) -> usize {
    let l = (2.23 * (k.max(1) as f64 / (delta * delta)).ln()).ceil();
    (l as usize).max(1)
}

/// Output of [`inverse_iteration`].
#[derive(Debug, Clone)]
pub struct InverseIteration<T> {
    /// Unit approximation of the smallest right singular vector.
    pub vector: Vec<T>,
    /// `‖M v‖₂`, an upper bound on `σ_min(M)`.
    pub sigma: T,
    pub iterations: usize,
    /// Whether tiny diagonal entries had to be floored to make the solves finite.
    pub floored: bool,
}

/// Approximates the smallest right singular vector of `view` by iterating
/// `v ← normalize((MᵀM)⁻¹ v)` from a Gaussian start drawn with `seed`.
///
/// Runs at most [`inverse_iteration_steps`]`(k, delta)` iterations and stops early once
/// the Rayleigh quotient `‖Mv‖₂²` changes by less than 1e-14 relative.
pub fn inverse_iteration<T: Scalar>(
    view: &UpperBand<T>,
    k: usize,
    delta: T,
    seed: u64,
) -> Result<InverseIteration<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    let n = view.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty band".into()));
    }
    let steps = inverse_iteration_steps(k, delta.to_f64_lossy());
    let mut start: Vec<T> = gaussian_vec(&mut rng(seed), n);
    let s = norm2(&start);
    scale_in_place(T::one() / s, &mut start);

    match iterate(view, &start, steps, |j| view.diagonal(j)) {
        Ok(res) => Ok(res),
        Err(Error::SingularBand(_)) => {
            let scale = view
                .columns
                .iter()
                .flatten()
                .fold(T::zero(), |m, &x| m.max(x.abs()));
            let floor = (T::lit(1e-30) * scale).max(T::min_positive_value().sqrt());
            log::debug!("inverse iteration: flooring diagonal at {floor:e}");
            let floored = |j: usize| {
                let d = view.diagonal(j);
                if d.abs() >= floor {
                    d
                } else if d < T::zero() {
                    -floor
                } else {
                    floor
                }
            };
            let mut res = iterate(view, &start, steps, floored)?;
            res.floored = true;
            Ok(res)
        }
        Err(e) => Err(e),
    }
}

fn iterate<T: Scalar>(
    view: &UpperBand<T>,
    start: &[T],
    steps: usize,
    diag_of: impl Fn(usize) -> T + Copy,
) -> Result<InverseIteration<T>> {
    let mut v = start.to_vec();
    let mut rq_prev = T::infinity();
    let mut iterations = 0;
    let mut sigma = T::zero();
    for it in 1..=steps {
        iterations = it;
        let mut z = view.solve_with(&v, true, diag_of)?;
        let nz = norm2(&z);
        if !nz.is_finite() || nz == T::zero() {
            return Err(Error::SingularBand(first_small_diagonal(view)));
        }
        scale_in_place(T::one() / nz, &mut z);
        let mut w = view.solve_with(&z, false, diag_of)?;
        let nw = norm2(&w);
        if !nw.is_finite() || nw == T::zero() {
            return Err(Error::SingularBand(first_small_diagonal(view)));
        }
        scale_in_place(T::one() / nw, &mut w);
        v = w;
        sigma = norm2(&view.matvec(&v));
        let rq = sigma * sigma;
        if rq == T::zero()
            || (rq_prev.is_finite() && (rq - rq_prev).abs() <= T::lit(1e-14) * rq_prev)
        {
            break;
        }
        rq_prev = rq;
    }
    Ok(InverseIteration {
        vector: v,
        sigma,
        iterations,
        floored: false,
    })
}

fn first_small_diagonal<T: Scalar>(view: &UpperBand<T>) -> usize {
    (0..view.dim())
        .min_by(|&a, &b| {
            view.diagonal(a)
                .abs()
                .partial_cmp(&view.diagonal(b).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0)
}
