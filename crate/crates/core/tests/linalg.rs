mod common;

use berr_core::linalg::random::{gaussian_vec, rng};
use berr_core::linalg::{
    axpy, dot, estimate_spectral_norm, norm2, DenseMatrix, LinearOperator, Orthogonal,
};
use berr_core::Csr;
use common::*;
use proptest::prelude::*;

fn random_dense(n: usize, m: usize, seed: u64) -> DenseMatrix<f64> {
    let data = gaussian_vec(&mut rng(seed), n * m);
    DenseMatrix::from_row_major(n, m, data).unwrap()
}

fn random_symmetric(n: usize, seed: u64) -> DenseMatrix<f64> {
    let g = random_dense(n, n, seed);
    DenseMatrix::from_fn(n, n, |i, j| g.get(i, j) + g.get(j, i))
}

fn all_backings(seed: u64) -> Vec<LinearOperator<f64>> {
    let n = 9;
    let dense = LinearOperator::dense(random_dense(n, n, seed));
    let sym = LinearOperator::dense(random_symmetric(n, seed + 1));
    let trip: Vec<_> = (0..n)
        .flat_map(|i| [(i, i, 2.0 + i as f64), (i, (i * 4 + 1) % n, -0.5)])
        .collect();
    let csr = LinearOperator::csr(Csr::from_triplets(n, n, &trip).unwrap(), false);
    let diag = LinearOperator::diagonal((1..=n).map(|i| 1.0 / i as f64).collect());
    let shifted = sym.shifted(0.25).unwrap();
    let perturbed = dense.perturbed(1e-2, random_dense(n, n, seed + 2)).unwrap();
    let disguised = dense
        .disguised(
            Orthogonal::random(n, seed + 3),
            Some(Orthogonal::random(n, seed + 4)),
        )
        .unwrap();
    vec![dense, sym, csr, diag, shifted, perturbed, disguised]
}

#[test]
fn dense_apply_matches_row_dots() {
    let m = random_dense(8, 8, 1);
    let op = LinearOperator::dense(m.clone());
    let v = gaussian_vec(&mut rng(2), 8);
    let got = op.apply(&v).unwrap();
    for (i, &g) in got.iter().enumerate() {
        let want: f64 = (0..8).map(|j| m.get(i, j) * v[j]).sum();
        assert!((g - want).abs() <= 1e-15 * want.abs().max(1.0));
    }
}

#[test]
fn dense_adjoint_matches_explicit_transpose() {
    let m = random_dense(8, 6, 3);
    let op = LinearOperator::dense(m.clone());
    let v = gaussian_vec(&mut rng(4), 8);
    let got = op.apply_adjoint(&v).unwrap();
    let want = LinearOperator::dense(m.transpose()).apply(&v).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-15 * w.abs().max(1.0));
    }
}

#[test]
fn norm_estimate_matches_dense_svd() {
    let m = random_dense(20, 20, 5);
    let op = LinearOperator::dense(m.clone());
    let est = estimate_spectral_norm(&op, 1e-3, 300, 0).unwrap();
    let exact = sigma_max(&to_na(&m));
    assert!(est.value <= exact * (1.0 + 1e-12));
    assert!(
        rel_diff(est.value, exact) <= 1e-3,
        "{} vs {exact}",
        est.value
    );
    let again = estimate_spectral_norm(&op, 1e-3, 300, 0).unwrap();
    assert_eq!(est, again);
}

#[test]
fn shift_adds_exactly_one_axpy() {
    let base = LinearOperator::dense(random_symmetric(6, 6));
    let delta = 0.375;
    let shifted = base.shifted(delta).unwrap();
    let v = gaussian_vec(&mut rng(7), 6);
    let av = base.apply(&v).unwrap();
    let want: Vec<f64> = av.iter().zip(&v).map(|(a, x)| a + delta * x).collect();
    assert_eq!(shifted.apply(&v).unwrap(), want);
}

#[test]
fn vector_helpers() {
    assert_eq!(norm2(&[3.0_f64, 4.0]), 5.0);
    assert_eq!(dot(&[1.0_f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    assert_eq!(
        axpy(2.0_f64, &[1.0, 0.0], &[0.0, 1.0]).unwrap(),
        vec![2.0, 1.0]
    );
    assert!(dot(&[1.0_f64], &[1.0, 2.0]).is_err());
}

#[test]
fn f32_operators() {
    let op = LinearOperator::<f32>::diagonal(vec![2.0, 1.0]);
    assert_eq!(op.apply(&[1.0, 1.0]).unwrap(), vec![2.0, 1.0]);
    assert_eq!(op.opnorm().unwrap(), 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        for op in all_backings(seed) {
            let mut g = rng(seed ^ 0xabc);
            let u = gaussian_vec(&mut g, 9);
            let v = gaussian_vec(&mut g, 9);
            let comb: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = op.apply(&comb).unwrap();
            let au = op.apply(&u).unwrap();
            let av = op.apply(&v).unwrap();
            let diff: Vec<f64> = (0..9).map(|i| lhs[i] - a * au[i] - b * av[i]).collect();
            let bound = 1e-12 * (norm2(&u) + norm2(&v)) * op.opnorm().unwrap() * (1.0 + a.abs() + b.abs());
            prop_assert!(norm2(&diff) <= bound, "{}: {} > {}", op.kind(), norm2(&diff), bound);
        }
    }

    #[test]
    fn adjoint_is_consistent(seed in 0u64..1000) {
        for op in all_backings(seed) {
            let mut g = rng(seed ^ 0xdef);
            let u = gaussian_vec(&mut g, 9);
            let v = gaussian_vec(&mut g, 9);
            let lhs = dot(&op.apply(&u).unwrap(), &v).unwrap();
            let rhs = dot(&u, &op.apply_adjoint(&v).unwrap()).unwrap();
            let scale = norm2(&u) * norm2(&v) * op.opnorm().unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{}", op.kind());
            if op.is_symmetric() {
                let sym = dot(&u, &op.apply(&v).unwrap()).unwrap();
                prop_assert!((lhs - sym).abs() <= 1e-12 * scale, "{}", op.kind());
            }
        }
    }

    #[test]
    fn norm_estimate_is_positive_and_below_true_norm(seed in 0u64..1000) {
        let m = random_dense(7, 5, seed);
        let op = LinearOperator::dense(m.clone());
        let est = estimate_spectral_norm(&op, 1e-3, 300, seed).unwrap();
        prop_assert!(est.value > 0.0);
        prop_assert!(est.value <= sigma_max(&to_na(&m)) * (1.0 + 1e-12));
    }

    #[test]
    fn norm2_matches_naive(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let naive = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm2(&v) - naive).abs() <= 1e-14 * naive.max(1e-300));
    }
}
