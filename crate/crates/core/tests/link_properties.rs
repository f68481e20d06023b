mod common;

use approx::assert_relative_eq;
use logit_bandit::link::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn sigmoid_is_symmetric_and_bounded(z in -700.0f64..700.0) {
        let s = sigmoid(z);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s + sigmoid(-z) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn slope_matches_product_form(z in -30.0f64..30.0) {
        let s = sigmoid(z);
        prop_assert!((sigmoid_deriv(z) - s * (1.0 - s)).abs() <= 1e-15);
        prop_assert_eq!(sigmoid_deriv(z), sigmoid_deriv(-z));
    }

    #[test]
    fn alpha_is_symmetric_and_positive(z1 in -50.0f64..50.0, z2 in -50.0f64..50.0) {
        prop_assert_eq!(alpha(z1, z2), alpha(z2, z1));
        prop_assert!(alpha(z1, z2) > 0.0);
    }

    #[test]
    fn envelope_sandwiches_alpha(z1 in -10.0f64..10.0, z2 in -10.0f64..10.0) {
        let a = common::alpha_quadrature(z1, z2);
        let e = self_concordance_envelope(z1, z2);
        prop_assert!(e.lower <= a + 1e-12);
        prop_assert!(a <= e.upper + 1e-12);
        prop_assert!(e.lower_simple <= a + 1e-12);
    }

    #[test]
    fn kappa_is_monotone(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        prop_assume!(a < b);
        prop_assert!(kappa_of(a).unwrap() < kappa_of(b).unwrap());
    }
}

#[test]
fn alpha_reference_point_against_quadrature() {
    let expected = (sigmoid(2.0) - sigmoid(-2.0)) / 4.0;
    assert!((common::alpha_quadrature(-2.0, 2.0) - expected).abs() <= 1e-12);
    assert!((alpha(-2.0, 2.0) - common::alpha_quadrature(-2.0, 2.0)).abs() <= 1e-12);
}

#[test]
fn alpha_matches_quadrature_near_switch() {
    for gap in [1e-9, 1e-7, 2e-7, 1e-5, 1e-3] {
        for z in [-15.0, -1.0, 0.0, 3.0, 18.0] {
            let q = common::alpha_quadrature(z, z + gap);
            assert!((alpha(z, z + gap) - q).abs() <= 1e-12, "z={z} gap={gap}");
        }
    }
}

#[test]
fn generalized_self_concordance_on_grid() {
    let mut z = -30.0;
    while z <= 30.0 {
        assert!(sigmoid_second_deriv(z).abs() <= sigmoid_deriv(z));
        z += 1e-3;
    }
}

#[test]
fn second_derivative_matches_product_form() {
    for z in [-7.0, -0.3, 0.0, 1.1, 9.0] {
        let s = sigmoid(z);
        assert_relative_eq!(sigmoid_second_deriv(z), s * (1.0 - s) * (1.0 - 2.0 * s), epsilon = 1e-15);
    }
}

#[test]
fn kappa_dominates_exponential() {
    let mut m = 0.0;
    while m <= 60.0 {
        assert!(kappa_of(m).unwrap() >= m.exp());
        m += 0.01;
    }
}

#[test]
fn large_logit_kappa_is_representable() {
    // S = 100 scale
    let k = kappa_of(100.0).unwrap();
    assert!(k.is_finite() && k > 1e43);
    let e = self_concordance_envelope(100.0, -100.0);
    assert!(e.ln_upper.is_finite());
}
