use gradflow::convex_core::{lambda_ladder_checks, minimal_section, moreau_gradient_check, yosida_pair_checks};
use gradflow::mesh::{build_mesh, random_field};
use gradflow::{DiscreteFunctional, Integrand, ProxSolver};
use proptest::prelude::*;

fn integrand(i: usize) -> Integrand {
    match i {
        0 => Integrand::g(0.0),
        1 => Integrand::g(-2.0),
        2 => Integrand::g(4.0),
        3 => Integrand::p_dirichlet(2.0).unwrap(),
        _ => Integrand::p_dirichlet(3.0).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn resolvent_pair_properties(i in 0usize..5, seed in any::<u64>(), log_lambda in -3.0f64..-1.0) {
        let mesh = build_mesh(2, 2, 8).unwrap();
        let f = DiscreteFunctional::new(&mesh, integrand(i)).unwrap();
        let lambda = 10f64.powf(log_lambda);
        let w = random_field(&mesh, seed, 0.05);
        let wt = random_field(&mesh, seed ^ 0xabc, 0.05);
        let r = yosida_pair_checks(&f, &w, &wt, lambda, &ProxSolver::default()).unwrap();
        prop_assert!(r.nonexpansive >= -1e-8);
        prop_assert!(r.lipschitz >= -1e-8);
        prop_assert!(r.monotone >= -1e-8);
        prop_assert!(r.contraction_factor <= 1.0 + 1e-8);
    }
}

#[test]
fn moreau_envelope_gradient_and_sandwich() {
    let mesh = build_mesh(2, 2, 8).unwrap();
    for i in 0..5 {
        let f = DiscreteFunctional::new(&mesh, integrand(i)).unwrap();
        let w = random_field(&mesh, 40 + i as u64, 0.05);
        let r = moreau_gradient_check(&f, &w, 0.01, &ProxSolver::with_tol(1e-11), 9).unwrap();
        assert!(r.fd_max_rel_err <= 1e-5, "{}: {}", f.label(), r.fd_max_rel_err);
        assert!(r.midpoint_margin >= -1e-8);
        assert!(r.sandwich_lower >= -1e-8 && r.sandwich_upper >= -1e-8);
    }
}

#[test]
fn yosida_bounded_by_minimal_section() {
    let mesh = build_mesh(2, 2, 8).unwrap();
    let f = DiscreteFunctional::new(&mesh, Integrand::g(2.0)).unwrap();
    let w = random_field(&mesh, 5, 0.05);
    let a0 = minimal_section(&f, &w).norm();
    let report = lambda_ladder_checks(&f, &w, &[1e-1, 1e-2, 1e-3, 1e-4], &ProxSolver::with_tol(1e-11), 1e-8).unwrap();
    assert!(report.all_pass(), "{:?}", report.first_failure());
    assert!(report.constants["a0_norm"] == a0);
}
