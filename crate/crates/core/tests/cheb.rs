use std::f64::consts::FRAC_PI_2;

use berr_core::cheb::{
    approx_error, approx_error_bound, f_ell, f_ell_limit, g_of_x, shifted_cheb, ChebEval,
};
use proptest::prelude::*;

#[test]
fn shifted_chebyshev_values() {
    for m in 0..20 {
        assert_eq!(shifted_cheb(m, 1.0_f64), 1.0);
    }
    assert_eq!(shifted_cheb(2, 0.5_f64), -1.0);
    let want = (8.0 * (-0.4_f64).acos()).cos();
    assert!((shifted_cheb(8, 0.3_f64) - want).abs() <= 1e-13);
}

#[test]
fn g_identities() {
    for ell in (2..=20).step_by(2) {
        assert!(g_of_x(ell, 0.0_f64).unwrap().abs() <= 1e-15);
        assert!(g_of_x(ell, 1.0_f64).unwrap().abs() <= 1e-15);
        for i in 1..=1000 {
            let gamma = FRAC_PI_2 * i as f64 / 1000.0;
            let x = gamma.sin().powi(2);
            let want = (ell as f64 * gamma).sin().powi(2) / (ell * ell) as f64;
            assert!(
                (g_of_x(ell, x).unwrap() - want).abs() <= 1e-12,
                "ell={ell} gamma={gamma}"
            );
        }
    }
    assert!(g_of_x(3, 0.5_f64).is_err());
}

#[test]
fn g_is_between_zero_and_x() {
    for ell in [2, 6, 16, 40] {
        for i in 0..=100_000 {
            let x = i as f64 / 100_000.0;
            let g = g_of_x(ell, x).unwrap();
            assert!(g >= -1e-15 && g <= x + 1e-15, "ell={ell} x={x} g={g}");
        }
    }
}

#[test]
fn limits_and_suprema() {
    assert_eq!(approx_error_bound::<f64>(2), 1.0);
    assert!((approx_error(2, 0.0_f64).unwrap() - 1.0).abs() <= 1e-15);
    assert!((f_ell_limit::<f64>(2) - 4.0).abs() <= 1e-15);
    for ell in (2..=40).step_by(2) {
        let gamma = FRAC_PI_2 / ell as f64;
        assert!(f_ell(ell, gamma).unwrap() < f_ell_limit(ell));
    }
}

#[test]
fn f_ell_is_decreasing_on_first_lobe() {
    for ell in (2..=40).step_by(2) {
        let end = FRAC_PI_2 / ell as f64;
        let mut prev = f_ell(ell, 0.0_f64).unwrap();
        for i in 1..=10_000 {
            let v = f_ell(ell, end * i as f64 / 10_000.0).unwrap();
            assert!(v <= prev * (1.0 + 1e-13), "ell={ell} i={i}");
            prev = v;
        }
    }
}

#[test]
fn grid_maximum_is_below_certificate() {
    for ell in (2..=40).step_by(2) {
        let (max, _) = ChebEval::new(ell).unwrap().max_approx_error().unwrap();
        let bound = approx_error_bound::<f64>(ell);
        assert!(max <= bound * (1.0 + 1e-8));
        assert!((max - bound).abs() <= 1e-3 * bound);
    }
}

proptest! {
    #[test]
    fn approx_error_is_bounded(half in 1usize..=20, x in 0.0f64..=1.0) {
        let ell = 2 * half;
        let v = approx_error(ell, x).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= approx_error_bound::<f64>(ell) * (1.0 + 1e-8));
    }

    #[test]
    fn recurrence_matches_trigonometric_form(m in 0usize..40, x in 0.0f64..=1.0) {
        let want = (m as f64 * (2.0 * x - 1.0).acos()).cos();
        prop_assert!((shifted_cheb(m, x) - want).abs() <= 1e-11);
    }
}
