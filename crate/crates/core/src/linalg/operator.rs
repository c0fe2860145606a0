use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

use super::norm::{estimate_spectral_norm, DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_REL_TOL};
use super::vector::axpy_in_place;
use super::{CsrMatrix, DenseMatrix, Orthogonal};

/// Storage behind a [`LinearOperator`].
#[derive(Debug)]
pub enum Backing<T> {
    Dense(DenseMatrix<T>),
    Csr(CsrMatrix<T>),
    Diagonal(Vec<T>),
    /// `base + shift·I`
    Shifted {
        base: LinearOperator<T>,
        shift: T,
    },
    /// `base + scale·noise`
    Perturbed {
        base: LinearOperator<T>,
        scale: T,
        noise: DenseMatrix<T>,
    },
    /// `left · base · rightᵀ`, with `right = left` when absent.
    Disguised {
        base: LinearOperator<T>,
        left: Orthogonal<T>,
        right: Option<Orthogonal<T>>,
    },
}

/// Matrix-free linear operator: the only way solvers touch `A`.
///
/// Cloning is cheap (the backing is shared) and an operator never changes after
/// construction, apart from a lazily filled spectral-norm cache.
#[derive(Clone)]
pub struct LinearOperator<T> {
    rows: usize,
    cols: usize,
    symmetric: bool,
    backing: Arc<Backing<T>>,
    opnorm: Arc<OnceLock<T>>,
}

impl<T> fmt::Debug for LinearOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("symmetric", &self.symmetric)
            .field("kind", &kind_name(&self.backing))
            .finish()
    }
}

fn kind_name<T>(b: &Backing<T>) -> &'static str {
    match b {
        Backing::Dense(_) => "dense",
        Backing::Csr(_) => "csr",
        Backing::Diagonal(_) => "diagonal",
        Backing::Shifted { .. } => "shifted",
        Backing::Perturbed { .. } => "perturbed",
        Backing::Disguised { .. } => "disguised",
    }
}

impl<T: Scalar> LinearOperator<T> {
    fn new(rows: usize, cols: usize, symmetric: bool, backing: Backing<T>) -> Self {
        Self {
            rows,
            cols,
            symmetric,
            backing: Arc::new(backing),
            opnorm: Arc::new(OnceLock::new()),
        }
    }

    /// Dense backing; the symmetric flag is set when the matrix is exactly symmetric.
    pub fn dense(m: DenseMatrix<T>) -> Self {
        let symmetric = m.is_symmetric(T::zero());
        Self::new(m.rows(), m.cols(), symmetric, Backing::Dense(m))
    }

    pub fn csr(m: CsrMatrix<T>, symmetric: bool) -> Self {
        Self::new(m.rows(), m.cols(), symmetric, Backing::Csr(m))
    }

    pub fn diagonal(d: Vec<T>) -> Self {
        let n = d.len();
        Self::new(n, n, true, Backing::Diagonal(d))
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(vec![T::one(); n])
    }

    /// `self + shift·I`. Costs one extra axpy per application.
    pub fn shifted(&self, shift: T) -> Result<Self> {
        self.require_square()?;
        Ok(Self::new(
            self.rows,
            self.cols,
            self.symmetric,
            Backing::Shifted {
                base: self.clone(),
                shift,
            },
        ))
    }

    /// `self + scale·noise` for a dense `noise` of matching shape.
    pub fn perturbed(&self, scale: T, noise: DenseMatrix<T>) -> Result<Self> {
        check_len(self.rows, noise.rows())?;
        check_len(self.cols, noise.cols())?;
        Ok(Self::new(
            self.rows,
            self.cols,
            false,
            Backing::Perturbed {
                base: self.clone(),
                scale,
                noise,
            },
        ))
    }

    /// `U·self·Vᵀ` (`V = U` when `right` is `None`). The spectral norm carries over.
    pub fn disguised(&self, left: Orthogonal<T>, right: Option<Orthogonal<T>>) -> Result<Self> {
        self.require_square()?;
        check_len(self.rows, left.dim())?;
        if let Some(r) = &right {
            check_len(self.cols, r.dim())?;
        }
        let symmetric = self.symmetric && right.is_none();
        let out = Self::new(
            self.rows,
            self.cols,
            symmetric,
            Backing::Disguised {
                base: self.clone(),
                left,
                right,
            },
        );
        if let Some(&v) = self.opnorm.get() {
            let _ = out.opnorm.set(v);
        }
        Ok(out)
    }

    /// Returns a copy whose spectral norm is taken as `value` instead of being estimated.
    pub fn with_opnorm(&self, value: T) -> Result<Self> {
        if !(value > T::zero()) {
            return Err(Error::NonPositiveOpnorm(value.to_f64_lossy()));
        }
        let mut out = self.clone();
        out.opnorm = Arc::new(OnceLock::new());
        let _ = out.opnorm.set(value);
        Ok(out)
    }

    /// Marks the operator symmetric (caller's promise; adjoint applications then reuse `apply`).
    pub fn assume_symmetric(mut self) -> Self {
        self.symmetric = self.rows == self.cols;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn backing(&self) -> &Backing<T> {
        &self.backing
    }

    pub fn kind(&self) -> &'static str {
        kind_name(&self.backing)
    }

    fn require_square(&self) -> Result<()> {
        if self.rows == self.cols {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "operator must be square, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    /// `A·v`
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.rows];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `Aᵀ·v`
    pub fn apply_adjoint(&self, v: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.cols];
        self.apply_adjoint_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, v: &[T], out: &mut [T]) -> Result<()> {
        check_len(self.cols, v.len())?;
        check_len(self.rows, out.len())?;
        self.apply_unchecked(v, out);
        Ok(())
    }

    pub fn apply_adjoint_into(&self, v: &[T], out: &mut [T]) -> Result<()> {
        check_len(self.rows, v.len())?;
        check_len(self.cols, out.len())?;
        if self.symmetric {
            self.apply_unchecked(v, out);
        } else {
            self.apply_adjoint_unchecked(v, out);
        }
        Ok(())
    }

    fn apply_unchecked(&self, v: &[T], out: &mut [T]) {
        match &*self.backing {
            Backing::Dense(m) => m.matvec_into(v, out),
            Backing::Csr(m) => m.matvec_into(v, out),
            Backing::Diagonal(d) => {
                for ((o, &di), &vi) in out.iter_mut().zip(d).zip(v) {
                    *o = di * vi;
                }
            }
            Backing::Shifted { base, shift } => {
                base.apply_unchecked(v, out);
                axpy_in_place(*shift, v, out);
            }
            Backing::Perturbed { base, scale, noise } => {
                base.apply_unchecked(v, out);
                let mut tmp = vec![T::zero(); self.rows];
                noise.matvec_into(v, &mut tmp);
                axpy_in_place(*scale, &tmp, out);
            }
            Backing::Disguised { base, left, right } => {
                let mut w = v.to_vec();
                right
                    .as_ref()
                    .unwrap_or(left)
                    .apply_transpose_in_place(&mut w);
                base.apply_unchecked(&w, out);
                left.apply_in_place(out);
            }
        }
    }

    fn apply_adjoint_unchecked(&self, v: &[T], out: &mut [T]) {
        match &*self.backing {
            Backing::Dense(m) => m.matvec_t_into(v, out),
            Backing::Csr(m) => m.matvec_t_into(v, out),
            Backing::Diagonal(_) => self.apply_unchecked(v, out),
            Backing::Shifted { base, shift } => {
                base.apply_adjoint_dispatch(v, out);
                axpy_in_place(*shift, v, out);
            }
            Backing::Perturbed { base, scale, noise } => {
                base.apply_adjoint_dispatch(v, out);
                let mut tmp = vec![T::zero(); self.cols];
                noise.matvec_t_into(v, &mut tmp);
                axpy_in_place(*scale, &tmp, out);
            }
            Backing::Disguised { base, left, right } => {
                let mut w = v.to_vec();
                left.apply_transpose_in_place(&mut w);
                base.apply_adjoint_dispatch(&w, out);
                right.as_ref().unwrap_or(left).apply_in_place(out);
            }
        }
    }

    fn apply_adjoint_dispatch(&self, v: &[T], out: &mut [T]) {
        if self.symmetric {
            self.apply_unchecked(v, out)
        } else {
            self.apply_adjoint_unchecked(v, out)
        }
    }

    /// Spectral norm available without iteration: diagonal backings and
    /// orthogonal disguises of them.
    pub fn exact_opnorm(&self) -> Option<T> {
        if let Some(&v) = self.opnorm.get() {
            return Some(v);
        }
        match &*self.backing {
            Backing::Diagonal(d) => Some(d.iter().fold(T::zero(), |m, &x| m.max(x.abs()))),
            Backing::Disguised { base, .. } => base.exact_opnorm(),
            _ => None,
        }
    }

    /// Cached `‖A‖₂`: exact where the backing allows it, otherwise a power-iteration
    /// estimate (relative tolerance 1e-3, at most 300 iterations, seed 0).
    pub fn opnorm(&self) -> Result<T> {
        if let Some(&v) = self.opnorm.get() {
            return Ok(v);
        }
        let v = match self.exact_opnorm() {
            Some(v) if v > T::zero() => v,
            Some(_) => return Err(Error::ZeroOperator),
            None => {
                estimate_spectral_norm(
                    self,
                    T::lit(DEFAULT_NORM_REL_TOL),
                    DEFAULT_NORM_MAX_ITER,
                    0,
                )?
                .value
            }
        };
        Ok(*self.opnorm.get_or_init(|| v))
    }

    /// Materializes the operator column by column. Intended for small test-scale operators.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        match &*self.backing {
            Backing::Dense(m) => m.clone(),
            Backing::Csr(m) => m.to_dense(),
            _ => {
                let mut m = DenseMatrix::zeros(self.rows, self.cols);
                let mut e = vec![T::zero(); self.cols];
                let mut col = vec![T::zero(); self.rows];
                for j in 0..self.cols {
                    e[j] = T::one();
                    self.apply_unchecked(&e, &mut col);
                    e[j] = T::zero();
                    for (i, &c) in col.iter().enumerate() {
                        m.set(i, j, c);
                    }
                }
                m
            }
        }
    }
}
