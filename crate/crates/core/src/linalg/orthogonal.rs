use crate::error::{check_len, Result};
use crate::scalar::Scalar;

use super::random::{gaussian_vec, rng};
use super::vector::{axpy_in_place, dot_unchecked, normalize};

/// Orthogonal matrix `H₁H₂⋯H_m` stored implicitly as Householder reflectors
/// `Hᵢ = I − 2wᵢwᵢᵀ` with unit `wᵢ`. Applying it costs `O(mn)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthogonal<T> {
    n: usize,
    reflectors: Vec<Vec<T>>,
}

impl<T: Scalar> Orthogonal<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            reflectors: Vec::new(),
        }
    }

    /// Product of `n` reflectors with seeded Gaussian directions.
    pub fn random(n: usize, seed: u64) -> Self {
        Self::random_with(n, n, seed)
    }

    pub fn random_with(n: usize, reflectors: usize, seed: u64) -> Self {
        let mut g = rng(seed);
        let reflectors = (0..reflectors)
            .map(|_| {
                let mut w = gaussian_vec::<T>(&mut g, n);
                normalize(&mut w);
                w
            })
            .collect();
        Self { n, reflectors }
    }

    pub fn from_reflectors(n: usize, reflectors: Vec<Vec<T>>) -> Result<Self> {
        let mut out = Vec::with_capacity(reflectors.len());
        for mut w in reflectors {
            check_len(n, w.len())?;
            normalize(&mut w);
            out.push(w);
        }
        Ok(Self { n, reflectors: out })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        self.reflectors.is_empty()
    }

    fn reflect(w: &[T], v: &mut [T]) {
        let c = dot_unchecked(w, v);
        axpy_in_place(-(c + c), w, v);
    }

    /// `v ← Qv`
    pub fn apply_in_place(&self, v: &mut [T]) {
        for w in self.reflectors.iter().rev() {
            Self::reflect(w, v);
        }
    }

    /// `v ← Qᵀv`
    pub fn apply_transpose_in_place(&self, v: &mut [T]) {
        for w in &self.reflectors {
            Self::reflect(w, v);
        }
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.n, v.len())?;
        let mut out = v.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    pub fn apply_transpose(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.n, v.len())?;
        let mut out = v.to_vec();
        self.apply_transpose_in_place(&mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> super::DenseMatrix<T> {
        let mut m = super::DenseMatrix::zeros(self.n, self.n);
        let mut e = vec![T::zero(); self.n];
        for j in 0..self.n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            self.apply_in_place(&mut e);
            for (i, &v) in e.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }
}
