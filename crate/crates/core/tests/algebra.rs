use gradflow::analyzer::{eq_a_polynomial, split_g, swap_h};
use gradflow::integrands::g_hessian_form;
use gradflow::{Integrand, Mat2};
use proptest::prelude::*;

fn mat() -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(Mat2::from_array)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-11 * (1.0 + scale)
}

proptest! {
    #[test]
    fn conformal_split_identities(xi in mat(), eta in mat()) {
        let (sx, se) = (xi.conformal_split(), eta.conformal_split());
        let s = xi.norm_sq() + eta.norm_sq();
        prop_assert!(close(xi.norm_sq(), sx.plus.norm_sq() + sx.minus.norm_sq(), s));
        prop_assert!(close(xi.det(), 0.5 * (sx.plus.norm_sq() - sx.minus.norm_sq()), s));
        prop_assert!(close(xi.inner(eta), sx.plus.inner(se.plus) + sx.minus.inner(se.minus), s));
        prop_assert!(close(eta.inner(xi.cof()), sx.plus.inner(se.plus) - sx.minus.inner(se.minus), s));
        prop_assert!((sx.reconstruct() - xi).max_abs() <= 1e-15 * (1.0 + xi.max_abs()));
    }

    #[test]
    fn determinant_calculus(xi in mat(), eta in mat()) {
        let s = xi.norm_sq() + eta.norm_sq();
        prop_assert!(close(xi.inner(xi.cof()), 2.0 * xi.det(), s));
        prop_assert!(close((xi + eta).det(), xi.det() + eta.det() + eta.inner(xi.cof()), s));
        prop_assert!(eta.norm_sq() >= 2.0 * eta.det().abs() - 1e-12);
    }

    #[test]
    fn gradient_difference_expansion(xi in mat(), eta in mat(), k in -4.0f64..10.0) {
        let ig = Integrand::g(k);
        let lhs = (ig.eval_grad_a(xi + eta) - ig.eval_grad_a(xi)).inner(eta);
        let s = (1.0 + k.abs()) * (1.0 + xi.norm_sq() + eta.norm_sq()).powi(2);
        prop_assert!(close(lhs, eq_a_polynomial(k, xi, eta), s));
    }

    #[test]
    fn quasimonotone_pointwise_bound(xi in mat(), eta in mat(), k in 0.0f64..=8.0) {
        // (A(ξ+η) − A(ξ)):η ≥ (8−k)/8 |η|⁴ + 4k det ξ det η
        let ig = Integrand::g(k);
        let lhs = (ig.eval_grad_a(xi + eta) - ig.eval_grad_a(xi)).inner(eta);
        let rhs = (8.0 - k) / 8.0 * eta.norm_sq().powi(2) + 4.0 * k * xi.det() * eta.det();
        let s = (1.0 + k) * (1.0 + xi.norm_sq() + eta.norm_sq()).powi(2);
        prop_assert!(lhs - rhs >= -1e-11 * s);
    }

    #[test]
    fn convex_range_has_nonnegative_hessian(xi in mat(), eta in mat(), k in -2.0f64..=4.0) {
        let s = (1.0 + xi.norm_sq() * eta.norm_sq()) * 10.0;
        prop_assert!(g_hessian_form(k, xi, eta) >= -1e-11 * s);
    }

    #[test]
    fn swap_and_split_forms(xi in mat(), k in -6.0f64..10.0) {
        let s = (1.0 + k.abs()) * (1.0 + xi.norm_sq()).powi(2);
        prop_assert!(close(g_hessian_form(k, xi, xi.swap_rows()), swap_h(k, xi), s));
        let psi = Mat2::from_rows(xi.row1(), [0.0, 0.0]);
        let phi = Mat2::from_rows([0.0, 0.0], xi.row2());
        prop_assert!(close(g_hessian_form(k, psi, phi), split_g(k, xi), s));
    }
}

#[test]
fn hessian_is_indefinite_just_outside_the_range() {
    // η = cof-direction witnesses at ξ = I
    let i = Mat2::IDENTITY;
    let eta = Mat2::new(0.0, 1.0, 1.0, 0.0);
    assert_eq!(g_hessian_form(4.0, i, eta), 0.0);
    assert!(g_hessian_form(4.5, i, eta) < 0.0);
    let eta = Mat2::new(0.0, 0.0, 0.0, 1.0);
    let psi = Mat2::new(1.0, 0.0, 0.0, 0.0);
    assert_eq!(g_hessian_form(-2.0, psi, eta), 0.0);
    assert!(g_hessian_form(-2.5, psi, eta) < 0.0);
}
