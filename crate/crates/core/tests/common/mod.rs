//! Dense reference computations shared by the integration tests.
#![allow(dead_code)]

use berr_core::linalg::DenseMatrix;
use berr_core::spectral::UpperBand;
use nalgebra::DMatrix;

pub fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

pub fn band_to_na(m: &UpperBand<f64>) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

/// Smallest singular value by dense SVD.
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn band_sigma_min(m: &UpperBand<f64>) -> f64 {
    sigma_min(&band_to_na(m))
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random upper band matrix with two superdiagonals (or one when `bidiagonal`).
pub fn random_band(
    rng: &mut berr_core::linalg::random::Rng,
    k: usize,
    bidiagonal: bool,
) -> UpperBand<f64> {
    use berr_core::linalg::random::gaussian;
    let mut m = UpperBand::with_bandwidth(if bidiagonal { 1 } else { 2 });
    for _ in 0..k {
        let d: f64 = gaussian::<f64>(rng).abs() + 1e-3;
        if bidiagonal {
            m.push_column(&[gaussian(rng)], d);
        } else {
            m.push_column(&[gaussian(rng), gaussian(rng)], d);
        }
    }
    m
}
