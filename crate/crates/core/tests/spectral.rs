mod common;

use berr_core::linalg::random::{gaussian, rng, uniform};
use berr_core::spectral::{
    banded_upper_solve, inverse_iteration, inverse_iteration_steps, CholTest, DqdsTest,
    TestOutcome, UpperBand,
};
use common::*;
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use proptest::prelude::*;

fn chol_decisions<T: berr_core::Field>(eps_sq: T, cols: &[[T; 3]]) -> Vec<TestOutcome> {
    let mut t = CholTest::new(eps_sq);
    cols.iter().map(|c| t.step(c.clone())).collect()
}

fn dqds_decisions<T: berr_core::Field>(eps_sq: T, cols: &[[T; 3]]) -> Vec<TestOutcome> {
    let mut t = DqdsTest::new(eps_sq);
    cols.iter()
        .map(|c| t.step(c[2].clone() * c[2].clone(), c[1].clone() * c[1].clone()))
        .collect()
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::from_i64(num).unwrap() / BigRational::from_i64(den).unwrap()
}

#[test]
fn one_by_one_cases() {
    assert_eq!(
        CholTest::with_eps(0.5).step([0.0, 0.0, 1.0]),
        TestOutcome::Continue
    );
    assert_eq!(
        CholTest::with_eps(0.5).step([0.0, 0.0, 0.1]),
        TestOutcome::Converged
    );
    let mut d = DqdsTest::with_eps(0.5);
    assert_eq!(d.step(1.0, 0.0), TestOutcome::Continue);
    assert_eq!(d.carry(), Some(0.75));
}

#[test]
fn rational_chol_and_dqds_agree_on_hand_matrix() {
    // B = [[2, 1], [0, 1/2]]: σ_min² = (21/4 − √(21²/16 − 4))/2 ≈ 0.1979.
    let cols = [
        [BigRational::zero(), BigRational::zero(), ratio(2, 1)],
        [BigRational::zero(), ratio(1, 1), ratio(1, 2)],
    ];
    let cont = vec![TestOutcome::Continue, TestOutcome::Continue];
    let conv = vec![TestOutcome::Continue, TestOutcome::Converged];
    assert_eq!(chol_decisions(ratio(19, 100), &cols), cont);
    assert_eq!(dqds_decisions(ratio(19, 100), &cols), cont);
    assert_eq!(chol_decisions(ratio(20, 100), &cols), conv);
    assert_eq!(dqds_decisions(ratio(20, 100), &cols), conv);
}

#[test]
fn banded_solve_matches_dense() {
    let mut g = rng(3);
    for trial in 0..50 {
        let m = random_band(&mut g, 1 + trial % 25, trial % 2 == 0);
        let k = m.dim();
        let rhs: Vec<f64> = (0..k).map(|_| gaussian(&mut g)).collect();
        let dense = band_to_na(&m);
        for transposed in [false, true] {
            let got = banded_upper_solve(&m, &rhs, transposed).unwrap();
            let mat = if transposed {
                dense.transpose()
            } else {
                dense.clone()
            };
            let want = mat.lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
            let err = (DVector::from_column_slice(&got) - &want).norm() / want.norm();
            let cond = sigma_max(&dense) / sigma_min(&dense);
            assert!(err <= 1e-12 * cond.max(1.0), "trial {trial}: {err}");
        }
    }
}

#[test]
fn cholesky_factor_reconstructs_gram_block() {
    let mut g = rng(4);
    for trial in 0..100 {
        let mut m = UpperBand::with_bandwidth(2);
        for _ in 0..2 + trial % 20 {
            let sup: [f64; 2] = [0.3 * gaussian::<f64>(&mut g), 0.3 * gaussian::<f64>(&mut g)];
            m.push_column(&sup, 1.0 + uniform::<f64>(&mut g));
        }
        let eps = 0.5 * band_sigma_min(&m);
        let k = m.dim();
        let mut t = CholTest::with_eps(eps);
        let mut r = DMatrix::zeros(k, k);
        for j in 0..k {
            assert_eq!(t.step(*m.column(j)), TestOutcome::Continue);
            let [r2, r1, r0] = t.factor_column();
            assert!(r0 > 0.0);
            r[(j, j)] = r0;
            if j >= 1 {
                r[(j - 1, j)] = r1;
            }
            if j >= 2 {
                r[(j - 2, j)] = r2;
            }
        }
        let mm = band_to_na(&m);
        let gram = mm.transpose() * &mm - DMatrix::identity(k, k) * (eps * eps);
        let err = (r.transpose() * &r - &gram).norm() / gram.norm();
        assert!(err <= 1e-10, "trial {trial}: {err}");
    }
}

#[test]
fn dqds_carry_positive_before_convergence() {
    let mut g = rng(5);
    for trial in 0..200 {
        let m = random_band(&mut g, 1 + trial % 30, true);
        let eps = band_sigma_min(&m) * (2.0 * uniform::<f64>(&mut g));
        let mut t = DqdsTest::with_eps(eps);
        for j in 0..m.dim() {
            let c = m.column(j);
            if t.step(c[2] * c[2], c[1] * c[1]) == TestOutcome::Continue {
                assert!(t.carry().unwrap() > 0.0);
            } else {
                break;
            }
        }
    }
    let mut zero_shift = DqdsTest::with_eps(0.0);
    let m = random_band(&mut rng(6), 30, true);
    for j in 0..30 {
        let c = m.column(j);
        assert_eq!(
            zero_shift.step(c[2] * c[2], c[1] * c[1]),
            TestOutcome::Continue
        );
    }
}

#[test]
fn inverse_iteration_examples() {
    assert_eq!(inverse_iteration_steps(100, 0.1), 21);
    let mut m = UpperBand::<f64>::with_bandwidth(2);
    m.push_column(&[0.0, 0.0], 1.0);
    m.push_column(&[0.0, 0.0], 1e-6);
    // delta = 0.95 caps the iteration at two steps.
    assert_eq!(inverse_iteration_steps(2, 0.95), 2);
    let res = inverse_iteration(&m, 2, 0.95, 0).unwrap();
    assert!(res.iterations <= 2);
    assert!(res.vector[0].abs() <= 1e-6 && (res.vector[1].abs() - 1.0).abs() <= 1e-6);
    assert!(inverse_iteration(&m, 2, 1.0, 0).is_err());
}

#[test]
fn inverse_iteration_success_rate() {
    let mut g = rng(8);
    let mut good = 0;
    for trial in 0..500u64 {
        let m = random_band(&mut g, 2 + (trial % 29) as usize, trial % 2 == 0);
        let s = band_sigma_min(&m);
        let res = inverse_iteration(&m, m.dim(), 0.1, trial).unwrap();
        assert!(res.sigma >= s - 1e-14 * sigma_max(&band_to_na(&m)));
        if res.sigma * res.sigma <= 1.5 * s * s {
            good += 1;
        }
    }
    assert!(good >= 450, "{good}");
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-12i64..=12, 1i64..=6).prop_map(|(n, d)| ratio(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rational_chol_and_dqds_agree(
        entries in prop::collection::vec((small_rational(), small_rational()), 1..=8),
        eps_sq in (1i64..=40, 1i64..=10).prop_map(|(n, d)| ratio(n, d)),
    ) {
        let cols: Vec<[BigRational; 3]> = entries
            .iter()
            .enumerate()
            .map(|(j, (s, q))| {
                let sup = if j == 0 { BigRational::zero() } else { s.clone() };
                let diag = if q.is_zero() { ratio(1, 7) } else { q.clone() };
                [BigRational::zero(), sup, diag]
            })
            .collect();
        prop_assert_eq!(chol_decisions(eps_sq.clone(), &cols), dqds_decisions(eps_sq, &cols));
    }

    #[test]
    fn chol_decision_respects_margin(seed in 0u64..100_000, k in 1usize..=30, factor in 0.2f64..5.0) {
        let mut g = rng(seed);
        let m = random_band(&mut g, k, false);
        let s = band_sigma_min(&m);
        let eps = s * factor;
        prop_assume!(eps >= f64::EPSILON.sqrt());
        let converged = chol_decisions(eps * eps, &(0..k).map(|j| *m.column(j)).collect::<Vec<_>>())
            .last() == Some(&TestOutcome::Converged);
        if s > eps * (1.0 + 1e-8) {
            prop_assert!(!converged);
        }
        if s < eps * (1.0 - 1e-8) {
            prop_assert!(converged);
        }
    }

    #[test]
    fn band_matvec_matches_dense(seed in 0u64..100_000, k in 1usize..=20, bidiagonal: bool) {
        let mut g = rng(seed);
        let m = random_band(&mut g, k, bidiagonal);
        let v: Vec<f64> = (0..k).map(|_| gaussian(&mut g)).collect();
        let dense = band_to_na(&m);
        let dv = DVector::from_column_slice(&v);
        let want = &dense * &dv;
        let want_t = dense.transpose() * &dv;
        for i in 0..k {
            prop_assert!((m.matvec(&v)[i] - want[i]).abs() <= 1e-13 * (1.0 + want[i].abs()));
            prop_assert!((m.matvec_t(&v)[i] - want_t[i]).abs() <= 1e-13 * (1.0 + want_t[i].abs()));
        }
    }
}
