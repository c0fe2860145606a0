//! Test problems: the two diagonal hard-instance families, orthogonal disguises,
//! dense random fixtures, special right-hand sides and Matrix Market files.

mod matrix_market;

use std::path::{Path, PathBuf};

pub use matrix_market::{
    parse_matrix_market, read_matrix_market_vector, write_matrix_market,
    write_matrix_market_vector, MatrixMarket, Symmetry,
};

use crate::error::{check_len, Error, Result};
use crate::linalg::random::{rng, uniform};
use crate::linalg::vector::norm2;
use crate::linalg::{Backing, DenseMatrix, LinearOperator, Orthogonal};
use crate::scalar::Scalar;

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Synthetic,
    File(PathBuf),
}

/// Provenance and known spectral data of a [`ProblemInstance`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemMeta<T> {
    pub name: String,
    pub n: usize,
    /// Exact condition number for synthetic diagonal instances.
    pub kappa: Option<T>,
    /// Singular values in decreasing order, when known.
    pub sigma_list: Option<Vec<T>>,
    pub source: Source,
    pub seed: Option<u64>,
}

/// An operator, a right-hand side and what is known about them.
#[derive(Debug, Clone)]
pub struct ProblemInstance<T> {
    pub op: LinearOperator<T>,
    pub b: Vec<T>,
    pub meta: ProblemMeta<T>,
}

impl<T: Scalar> ProblemInstance<T> {
    /// Replaces the right-hand side.
    pub fn with_rhs(mut self, b: Vec<T>) -> Result<Self> {
        check_len(self.op.rows(), b.len())?;
        if b.iter().all(|&v| v == T::zero()) {
            return Err(Error::ZeroRhs);
        }
        self.b = b;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }
}

fn log_spaced<T: Scalar>(count: usize, last: T) -> Vec<T> {
    // 10^(−i·log₁₀(1/last)/(count−1)), endpoints exact.
    let decades = last.log10();
    let denom = T::from_count(count - 1);
    (0..count)
        .map(|i| match i {
            0 => T::one(),
            _ if i == count - 1 => last,
            _ => T::lit(10.0).powf(decades * T::from_count(i) / denom),
        })
        .collect()
}

fn diagonal_instance<T: Scalar>(name: String, d: Vec<T>, b: Vec<T>) -> ProblemInstance<T> {
    let n = d.len();
    let max = d.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let min = d.iter().fold(T::infinity(), |m, &x| m.min(x.abs()));
    let mut sigma: Vec<T> = d.iter().map(|x| x.abs()).collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).expect("finite diagonal"));
    ProblemInstance {
        op: LinearOperator::diagonal(d),
        b,
        meta: ProblemMeta {
            name,
            n,
            kappa: Some(max / min),
            sigma_list: Some(sigma),
            source: Source::Synthetic,
            seed: None,
        },
    }
}

/// Diagonal `A` with entries log-spaced from 1 down to `1/κ` (both included) and
/// `b = (1, …, 1, κ)`.
pub fn ill_conditioned<T: Scalar>(n: usize, kappa: T) -> Result<ProblemInstance<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "ill-conditioned needs n >= 2, got {n}"
        )));
    }
    if !(kappa > T::one()) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kappa must exceed 1, got {kappa}"
        )));
    }
    let d = log_spaced(n, T::one() / kappa);
    let mut b = vec![T::one(); n];
    b[n - 1] = kappa;
    Ok(diagonal_instance(
        format!("ill-conditioned(n={n},kappa={kappa:e})"),
        d,
        b,
    ))
}

/// Diagonal `A` whose first `n−1` entries are log-spaced from 1 to `sigma_penult`,
/// followed by the outlier `1/κ`; `b = (1, …, 1, √n)`.
pub fn small_outlier<T: Scalar>(n: usize, kappa: T, sigma_penult: T) -> Result<ProblemInstance<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "small-outlier needs n >= 3, got {n}"
        )));
    }
    if !(sigma_penult > T::zero() && sigma_penult < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in (0,1), got {sigma_penult}"
        )));
    }
    if !(kappa.is_finite() && T::one() / kappa < sigma_penult) {
        return Err(Error::InvalidParameter(format!(
            "need 1/kappa < sigma, got kappa = {kappa}, sigma = {sigma_penult}"
        )));
    }
    let mut d = log_spaced(n - 1, sigma_penult);
    d.push(T::one() / kappa);
    let mut b = vec![T::one(); n];
    b[n - 1] = T::from_count(n).sqrt();
    Ok(diagonal_instance(
        format!("small-outlier(n={n},kappa={kappa:e},sigma={sigma_penult:e})"),
        d,
        b,
    ))
}

/// `A → U A Vᵀ` (`V = U` unless `right` is given) and `b → U b`.
pub fn disguise_with<T: Scalar>(
    p: &ProblemInstance<T>,
    left: Orthogonal<T>,
    right: Option<Orthogonal<T>>,
) -> Result<ProblemInstance<T>> {
    let b = left.apply(&p.b)?;
    let two_sided = right.is_some();
    let op = p.op.disguised(left, right)?;
    let mut meta = p.meta.clone();
    meta.name = format!(
        "{}+{}",
        meta.name,
        if two_sided { "disguise2" } else { "disguise1" }
    );
    Ok(ProblemInstance { op, b, meta })
}

/// Random orthogonal disguise, each factor a product of `n` seeded Householder reflectors.
pub fn disguise<T: Scalar>(
    p: &ProblemInstance<T>,
    two_sided: bool,
    seed: u64,
) -> Result<ProblemInstance<T>> {
    let n = p.op.rows();
    let left = Orthogonal::random(n, seed);
    let right = two_sided.then(|| Orthogonal::random(n, seed.wrapping_add(1)));
    let mut out = disguise_with(p, left, right)?;
    out.meta.seed = Some(seed);
    Ok(out)
}

/// Largest dimension for which a dense SVD fallback is attempted.
pub const DENSE_SVD_LIMIT: usize = 2000;

/// Unit left singular vector of `A` for its smallest singular value.
///
/// Diagonal operators and their disguises are handled structurally; anything else
/// goes through a dense SVD when `n ≤ 2000`.
pub fn rhs_smallest_left_singular<T: Scalar>(p: &ProblemInstance<T>) -> Result<Vec<T>> {
    smallest_left_singular(&p.op)
}

fn smallest_left_singular<T: Scalar>(op: &LinearOperator<T>) -> Result<Vec<T>> {
    match op.backing() {
        Backing::Diagonal(d) => {
            let (i, &di) = d
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite diagonal"))
                .ok_or_else(|| Error::InvalidParameter("empty operator".into()))?;
            let mut u = vec![T::zero(); d.len()];
            u[i] = if di < T::zero() { -T::one() } else { T::one() };
            Ok(u)
        }
        Backing::Disguised { base, left, .. } => {
            let mut u = smallest_left_singular(base)?;
            left.apply_in_place(&mut u);
            Ok(u)
        }
        _ if op.rows() <= DENSE_SVD_LIMIT => {
            let dense = op.to_dense().to_nalgebra();
            let svd = dense.svd(true, false);
            let u = svd.u.expect("left singular vectors requested");
            let (imin, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .ok_or_else(|| Error::InvalidParameter("empty operator".into()))?;
            Ok(u.column(imin).iter().map(|&v| T::lit(v)).collect())
        }
        _ => Err(Error::InvalidParameter(format!(
            "no singular structure known and n = {} exceeds the dense SVD limit {DENSE_SVD_LIMIT}",
            op.rows()
        ))),
    }
}

/// Dense symmetric positive definite `Q·diag(λ)·Qᵀ` with `λ₁ = 1` and the remaining
/// eigenvalues `10^(−6u)`, `u` uniform; `Q` is a random orthogonal matrix.
/// The operator carries its exact spectral norm 1.
pub fn random_dense_psd<T: Scalar>(n: usize, seed: u64) -> Result<ProblemInstance<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut g = rng(seed);
    let mut lambda: Vec<T> = (0..n)
        .map(|_| T::lit(10.0).powf(-T::lit(6.0) * uniform::<T>(&mut g)))
        .collect();
    lambda[0] = T::one();
    let q = Orthogonal::<T>::random(n, seed.wrapping_add(0x9e37_79b9)).to_dense();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: T = (0..n).map(|l| q.get(i, l) * lambda[l] * q.get(j, l)).sum();
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    let b = crate::linalg::random::gaussian_vec(&mut g, n);
    let lmin = lambda.iter().fold(T::infinity(), |m, &x| m.min(x));
    let mut sigma = lambda.clone();
    sigma.sort_by(|a, b| b.partial_cmp(a).expect("finite spectrum"));
    Ok(ProblemInstance {
        op: LinearOperator::dense(a).with_opnorm(T::one())?,
        b,
        meta: ProblemMeta {
            name: format!("random-psd(n={n})"),
            n,
            kappa: Some(T::one() / lmin),
            sigma_list: Some(sigma),
            source: Source::Synthetic,
            seed: Some(seed),
        },
    })
}

/// Dense matrix with i.i.d. `N(0, 1/n)` entries and a Gaussian right-hand side.
pub fn random_dense_general<T: Scalar>(n: usize, seed: u64) -> Result<ProblemInstance<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut g = rng(seed);
    let s = T::one() / T::from_count(n).sqrt();
    let data = crate::linalg::random::gaussian_vec::<T>(&mut g, n * n)
        .into_iter()
        .map(|v| v * s)
        .collect();
    let a = DenseMatrix::from_row_major(n, n, data)?;
    let b = crate::linalg::random::gaussian_vec(&mut g, n);
    Ok(ProblemInstance {
        op: LinearOperator::dense(a),
        b,
        meta: ProblemMeta {
            name: format!("random-general(n={n})"),
            n,
            kappa: None,
            sigma_list: None,
            source: Source::Synthetic,
            seed: Some(seed),
        },
    })
}

/// Loads a Matrix Market matrix as a sparse operator with `b = A·1/‖A·1‖₂`.
pub fn read_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<ProblemInstance<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mm = parse_matrix_market::<T>(std::io::BufReader::new(file))?;
    let mut inst = mm.into_instance()?;
    inst.meta.name = path
        .file_stem()
        .map_or_else(|| "matrix".into(), |s| s.to_string_lossy().into_owned());
    inst.meta.source = Source::File(path.to_path_buf());
    Ok(inst)
}

/// `A·1/‖A·1‖₂`
pub fn default_rhs<T: Scalar>(op: &LinearOperator<T>) -> Result<Vec<T>> {
    let mut b = op.apply(&vec![T::one(); op.cols()])?;
    let nb = norm2(&b);
    if nb == T::zero() {
        return Err(Error::ZeroRhs);
    }
    b.iter_mut().for_each(|v| *v /= nb);
    Ok(b)
}
