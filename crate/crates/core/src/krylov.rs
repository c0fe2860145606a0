//! Lanczos tridiagonalization and Golub–Kahan bidiagonalization, one step at a time.
//!
//! Both states start from `b` and grow orthonormal bases together with the
//! recurrence coefficients. The band matrices T̃ₖ and B̃ₖ (first row of Tₖ or Bₖ
//! removed) are exposed column by column through [`LanczosState::ttilde_column`]
//! and [`BidiagState::btilde_column`].

use crate::error::{check_len, Error, Result};
use crate::linalg::vector::{axpy_in_place, dot_unchecked, norm2, scale_in_place};
use crate::linalg::LinearOperator;
use crate::scalar::Scalar;
use crate::spectral::UpperBand;

/// How new basis vectors are kept orthogonal to old ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reorthogonalization {
    /// Plain short recurrence, O(n) extra work per step.
    #[default]
    None,
    /// Classical Gram–Schmidt against every stored vector, applied twice.
    Full,
}

impl Reorthogonalization {
    pub fn is_full(self) -> bool {
        matches!(self, Self::Full)
    }
}

pub(crate) fn breakdown_tolerance<T: Scalar>(opnorm: T) -> T {
    T::lit(1e-14) * opnorm
}

fn reorthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot_unchecked(q, w);
            axpy_in_place(-c, q, w);
        }
    }
}

/// Pushes `v`, dropping the oldest vector when only a window of two is kept.
fn push_window<T>(basis: &mut Vec<Vec<T>>, offset: &mut usize, v: Vec<T>, retain_all: bool) {
    basis.push(v);
    if !retain_all && basis.len() > 2 {
        basis.remove(0);
        *offset += 1;
    }
}

/// Lanczos process `A Qₖ = Qₖ₊₁ Tₖ` for a symmetric operator.
#[derive(Debug, Clone)]
pub struct LanczosState<T> {
    basis: Vec<Vec<T>>,
    offset: usize,
    retain_all: bool,
    alphas: Vec<T>,
    betas: Vec<T>,
    last_product: Vec<T>,
    b_norm: T,
    breakdown: bool,
    breakdown_tol: T,
    reorth: Reorthogonalization,
    matvecs: usize,
}

impl<T: Scalar> LanczosState<T> {
    /// Starts from `q₁ = b/‖b‖₂`, keeping every basis vector.
    pub fn new(op: &LinearOperator<T>, b: &[T], reorth: Reorthogonalization) -> Result<Self> {
        Self::build(op, b, reorth, true)
    }

    /// Keeps only the last two basis vectors (enough for short-recurrence solvers).
    /// Full reorthogonalization forces the complete basis to be kept.
    pub fn windowed(op: &LinearOperator<T>, b: &[T], reorth: Reorthogonalization) -> Result<Self> {
        Self::build(op, b, reorth, reorth.is_full())
    }

    fn build(
        op: &LinearOperator<T>,
        b: &[T],
        reorth: Reorthogonalization,
        retain_all: bool,
    ) -> Result<Self> {
        if !op.is_symmetric() {
            return Err(Error::RequiresSymmetric);
        }
        check_len(op.rows(), b.len())?;
        let b_norm = norm2(b);
        if b_norm == T::zero() {
            return Err(Error::ZeroRhs);
        }
        let mut q1 = b.to_vec();
        scale_in_place(T::one() / b_norm, &mut q1);
        Ok(Self {
            basis: vec![q1],
            offset: 0,
            retain_all,
            alphas: Vec::new(),
            betas: Vec::new(),
            last_product: Vec::new(),
            b_norm,
            breakdown: false,
            breakdown_tol: breakdown_tolerance(op.opnorm()?),
            reorth,
            matvecs: 0,
        })
    }

    /// One Lanczos step: computes `αₖ`, `βₖ₊₁` and `qₖ₊₁`.
    pub fn step(&mut self, op: &LinearOperator<T>) -> Result<()> {
        if self.breakdown {
            return Err(Error::PostBreakdown);
        }
        let k = self.k() + 1;
        let qk = self.q(k).to_vec();
        let mut w = op.apply(&qk)?;
        self.matvecs += 1;
        self.last_product.clone_from(&w);
        if k > 1 {
            let beta = self.betas[k - 2];
            axpy_in_place(-beta, self.q(k - 1), &mut w);
        }
        let alpha = dot_unchecked(&w, &qk);
        axpy_in_place(-alpha, &qk, &mut w);
        if self.reorth.is_full() {
            reorthogonalize(&self.basis, &mut w);
        }
        let beta = norm2(&w);
        self.alphas.push(alpha);
        self.betas.push(beta);
        if beta < self.breakdown_tol {
            self.breakdown = true;
            log::debug!("lanczos breakdown at k = {k}: beta = {beta:e}");
            // Keep the coefficient list complete; the next vector is meaningless.
            push_window(
                &mut self.basis,
                &mut self.offset,
                vec![T::zero(); qk.len()],
                self.retain_all,
            );
        } else {
            scale_in_place(T::one() / beta, &mut w);
            push_window(&mut self.basis, &mut self.offset, w, self.retain_all);
        }
        Ok(())
    }

    /// Number of completed steps.
    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    /// `α₁..αₖ`.
    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    /// `β₂..βₖ₊₁`.
    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    /// Basis vector `q_j` (1-based). Panics if it was dropped from the window.
    pub fn q(&self, j: usize) -> &[T] {
        &self.basis[j - 1 - self.offset]
    }

    /// Stored basis vectors: all of `q₁..qₖ₊₁` unless windowed.
    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    pub fn retains_basis(&self) -> bool {
        self.retain_all
    }

    /// `A qₖ` from the most recent step.
    pub fn last_product(&self) -> &[T] {
        &self.last_product
    }

    pub fn b_norm(&self) -> T {
        self.b_norm
    }

    pub fn is_broken_down(&self) -> bool {
        self.breakdown
    }

    pub fn breakdown_tol(&self) -> T {
        self.breakdown_tol
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Entries of column `j` of T̃ₖ as `[second superdiagonal, superdiagonal, diagonal]`
    /// = `[β_j (j ≥ 3), α_j (j ≥ 2), β_{j+1}]`, zero where the band is empty.
    pub fn ttilde_column(&self, j: usize) -> [T; 3] {
        assert!(
            j >= 1 && j <= self.k(),
            "column {j} outside 1..={}",
            self.k()
        );
        let second = if j >= 3 { self.betas[j - 2] } else { T::zero() };
        let first = if j >= 2 {
            self.alphas[j - 1]
        } else {
            T::zero()
        };
        [second, first, self.betas[j - 1]]
    }

    /// The newest column of T̃ₖ.
    pub fn ttilde_append(&self) -> [T; 3] {
        self.ttilde_column(self.k())
    }

    /// T̃ₖ scaled by `scale`.
    pub fn ttilde(&self, scale: T) -> UpperBand<T> {
        let mut band = UpperBand::with_bandwidth(2);
        for j in 1..=self.k() {
            let c = self.ttilde_column(j);
            band.push_column(&[c[0] * scale, c[1] * scale], c[2] * scale);
        }
        band
    }

    /// First row of Tₖ restricted to the first two columns: `(α₁, β₂)`.
    pub fn first_row(&self) -> (T, T) {
        (
            self.alphas[0],
            if self.k() >= 2 {
                self.betas[0]
            } else {
                T::zero()
            },
        )
    }
}

/// Golub–Kahan bidiagonalization `A Qₖ = Uₖ₊₁ Bₖ` started from `u₁ = b/‖b‖₂`.
#[derive(Debug, Clone)]
pub struct BidiagState<T> {
    u: Vec<Vec<T>>,
    q: Vec<Vec<T>>,
    u_offset: usize,
    q_offset: usize,
    retain_all: bool,
    alphas: Vec<T>,
    betas: Vec<T>,
    last_product: Vec<T>,
    breakdown: bool,
    breakdown_tol: T,
    reorth: Reorthogonalization,
    matvecs: usize,
}

impl<T: Scalar> BidiagState<T> {
    /// Computes `β₁ = ‖b‖₂`, `u₁` and `α₁ q₁ = Aᵀu₁`, keeping every basis vector.
    pub fn new(op: &LinearOperator<T>, b: &[T], reorth: Reorthogonalization) -> Result<Self> {
        Self::build(op, b, reorth, true)
    }

    /// Keeps only the latest `u` and `q` pairs unless reorthogonalization needs them all.
    pub fn windowed(op: &LinearOperator<T>, b: &[T], reorth: Reorthogonalization) -> Result<Self> {
        Self::build(op, b, reorth, reorth.is_full())
    }

    fn build(
        op: &LinearOperator<T>,
        b: &[T],
        reorth: Reorthogonalization,
        retain_all: bool,
    ) -> Result<Self> {
        check_len(op.rows(), b.len())?;
        let beta1 = norm2(b);
        if beta1 == T::zero() {
            return Err(Error::ZeroRhs);
        }
        let mut u1 = b.to_vec();
        scale_in_place(T::one() / beta1, &mut u1);
        let mut q1 = op.apply_adjoint(&u1)?;
        let alpha1 = norm2(&q1);
        let breakdown_tol = breakdown_tolerance(op.opnorm()?);
        if alpha1 < breakdown_tol {
            return Err(Error::OrthogonalRhs);
        }
        scale_in_place(T::one() / alpha1, &mut q1);
        Ok(Self {
            u: vec![u1],
            q: vec![q1],
            u_offset: 0,
            q_offset: 0,
            retain_all,
            alphas: vec![alpha1],
            betas: vec![beta1],
            last_product: Vec::new(),
            breakdown: false,
            breakdown_tol,
            reorth,
            matvecs: 1,
        })
    }

    /// One step: `βₖ₊₁uₖ₊₁ = A qₖ − αₖuₖ`, then `αₖ₊₁qₖ₊₁ = Aᵀuₖ₊₁ − βₖ₊₁qₖ`.
    pub fn step(&mut self, op: &LinearOperator<T>) -> Result<()> {
        if self.breakdown {
            return Err(Error::PostBreakdown);
        }
        let k = self.k() + 1;
        let n = op.cols();
        let m = op.rows();
        let mut p = op.apply(self.q(k))?;
        self.matvecs += 1;
        self.last_product.clone_from(&p);
        axpy_in_place(-self.alphas[k - 1], self.u(k), &mut p);
        if self.reorth.is_full() {
            reorthogonalize(&self.u, &mut p);
        }
        let beta = norm2(&p);
        self.betas.push(beta);
        if beta < self.breakdown_tol {
            log::debug!("bidiagonalization breakdown at k = {k}: beta = {beta:e}");
            self.breakdown = true;
            self.alphas.push(T::zero());
            push_window(
                &mut self.u,
                &mut self.u_offset,
                vec![T::zero(); m],
                self.retain_all,
            );
            push_window(
                &mut self.q,
                &mut self.q_offset,
                vec![T::zero(); n],
                self.retain_all,
            );
            return Ok(());
        }
        scale_in_place(T::one() / beta, &mut p);

        let mut r = op.apply_adjoint(&p)?;
        self.matvecs += 1;
        axpy_in_place(-beta, self.q(k), &mut r);
        if self.reorth.is_full() {
            reorthogonalize(&self.q, &mut r);
        }
        let alpha = norm2(&r);
        self.alphas.push(alpha);
        push_window(&mut self.u, &mut self.u_offset, p, self.retain_all);
        if alpha < self.breakdown_tol {
            log::debug!("bidiagonalization breakdown at k = {k}: alpha = {alpha:e}");
            self.breakdown = true;
            push_window(
                &mut self.q,
                &mut self.q_offset,
                vec![T::zero(); n],
                self.retain_all,
            );
        } else {
            scale_in_place(T::one() / alpha, &mut r);
            push_window(&mut self.q, &mut self.q_offset, r, self.retain_all);
        }
        Ok(())
    }

    /// Number of completed steps.
    pub fn k(&self) -> usize {
        self.betas.len() - 1
    }

    /// `α₁..αₖ₊₁`.
    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    /// `β₁..βₖ₊₁` with `β₁ = ‖b‖₂`.
    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    /// Left basis vector `u_j` (1-based).
    pub fn u(&self, j: usize) -> &[T] {
        &self.u[j - 1 - self.u_offset]
    }

    /// Right basis vector `q_j` (1-based).
    pub fn q(&self, j: usize) -> &[T] {
        &self.q[j - 1 - self.q_offset]
    }

    pub fn u_basis(&self) -> &[Vec<T>] {
        &self.u
    }

    pub fn q_basis(&self) -> &[Vec<T>] {
        &self.q
    }

    pub fn retains_basis(&self) -> bool {
        self.retain_all
    }

    /// `A qₖ` from the most recent step.
    pub fn last_product(&self) -> &[T] {
        &self.last_product
    }

    pub fn b_norm(&self) -> T {
        self.betas[0]
    }

    pub fn is_broken_down(&self) -> bool {
        self.breakdown
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Column `j` of B̃ₖ as `[superdiagonal, diagonal] = [α_j (j ≥ 2), β_{j+1}]`.
    pub fn btilde_column(&self, j: usize) -> [T; 2] {
        assert!(
            j >= 1 && j <= self.k(),
            "column {j} outside 1..={}",
            self.k()
        );
        let sup = if j >= 2 {
            self.alphas[j - 1]
        } else {
            T::zero()
        };
        [sup, self.betas[j]]
    }

    /// The newest column of B̃ₖ.
    pub fn btilde_append(&self) -> [T; 2] {
        self.btilde_column(self.k())
    }

    /// B̃ₖ scaled by `scale`.
    pub fn btilde(&self, scale: T) -> UpperBand<T> {
        let mut band = UpperBand::with_bandwidth(1);
        for j in 1..=self.k() {
            let c = self.btilde_column(j);
            band.push_column(&[c[0] * scale], c[1] * scale);
        }
        band
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_lanczos_by_hand() {
        let a = LinearOperator::diagonal(vec![1.0, 2.0]);
        let s = 0.5f64.sqrt();
        let mut st = LanczosState::new(&a, &[s, s], Reorthogonalization::None).unwrap();
        st.step(&a).unwrap();
        assert!((st.alphas()[0] - 1.5).abs() < 1e-15);
        assert!((st.betas()[0] - 0.5).abs() < 1e-15);
        assert_eq!(st.ttilde_append(), [0.0, 0.0, st.betas()[0]]);
    }

    #[test]
    fn identity_breaks_down_immediately() {
        let a = LinearOperator::<f64>::identity(4);
        let mut st =
            LanczosState::new(&a, &[1.0, 2.0, 3.0, 4.0], Reorthogonalization::None).unwrap();
        st.step(&a).unwrap();
        assert!(st.is_broken_down());
        assert!(st.betas()[0] < 1e-14);
        assert!(matches!(st.step(&a), Err(Error::PostBreakdown)));
    }

    #[test]
    fn lanczos_rejects_nonsymmetric() {
        let a = LinearOperator::dense(
            crate::linalg::DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
        );
        assert!(matches!(
            LanczosState::new(&a, &[1.0, 1.0], Reorthogonalization::None),
            Err(Error::RequiresSymmetric)
        ));
    }

    #[test]
    fn bidiag_singular_vector_rhs() {
        let a = LinearOperator::diagonal(vec![2.0, 1.0]);
        let mut st = BidiagState::new(&a, &[1.0, 0.0], Reorthogonalization::None).unwrap();
        assert_eq!(st.alphas()[0], 2.0);
        st.step(&a).unwrap();
        assert_eq!(st.betas()[1], 0.0);
        assert!(st.is_broken_down());
    }

    #[test]
    fn bidiag_orthogonal_rhs_rejected() {
        let a = LinearOperator::diagonal(vec![1.0, 0.0]);
        assert!(matches!(
            BidiagState::new(&a, &[0.0, 1.0], Reorthogonalization::None),
            Err(Error::OrthogonalRhs)
        ));
    }

    #[test]
    fn second_column_of_ttilde() {
        let a = LinearOperator::diagonal(vec![1.0, 2.0, 3.0, 4.0]);
        let mut st = LanczosState::new(&a, &[1.0; 4], Reorthogonalization::Full).unwrap();
        st.step(&a).unwrap();
        st.step(&a).unwrap();
        let [s2, s1, d] = st.ttilde_append();
        assert_eq!(s2, 0.0);
        assert_eq!(s1, st.alphas()[1]);
        assert_eq!(d, st.betas()[1]);
    }

    #[test]
    fn windowed_state_drops_old_vectors() {
        let a = LinearOperator::diagonal((1..=10).map(f64::from).collect());
        let mut st = LanczosState::windowed(&a, &[1.0; 10], Reorthogonalization::None).unwrap();
        for _ in 0..5 {
            st.step(&a).unwrap();
        }
        assert_eq!(st.basis().len(), 2);
        assert_eq!(st.q(6).len(), 10);
    }
}
