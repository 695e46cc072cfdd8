use gradflow::analyzer::{null_lagrangian_term, quartic_norm, quasimonotonicity_margin};
use gradflow::mesh::{build_mesh, lp_grad_pow, random_field};
use gradflow::{DiscreteFunctional, Field, Integrand, Mat2};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cell_gradient_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mesh = build_mesh(2, 2, 5).unwrap();
        let u = random_field(&mesh, seed, 1.0);
        let v = random_field(&mesh, seed ^ 1, 1.0);
        let w = u.lincomb(a, b, &v);
        for c in 0..mesh.cell_count() {
            let lhs = w.cell_gradient(c);
            let rhs = u.cell_gradient(c) * a + v.cell_gradient(c) * b;
            prop_assert!((lhs - rhs).max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
        }
    }

    #[test]
    fn determinant_is_a_null_lagrangian(seed in any::<u64>(), m in 3usize..12) {
        let mesh = build_mesh(2, 2, m).unwrap();
        let u = random_field(&mesh, seed, 1.0);
        let area = mesh.cell_area();
        let total: f64 = u.gradients().map(|g| area * g.det()).sum();
        let scale: f64 = u.gradients().map(|g| area * g.norm_sq()).sum();
        prop_assert!(total.abs() <= 1e-13 * (1.0 + scale));
    }

    #[test]
    fn gradient_of_convex_functional_is_monotone(seed in any::<u64>(), k in -2.0f64..=4.0) {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(k)).unwrap();
        let u = random_field(&mesh, seed, 0.5);
        let v = random_field(&mesh, seed.wrapping_add(7), 0.5);
        let d = u.sub(&v);
        let m = f.gradient(&u).sub(&f.gradient(&v)).dot(&d);
        prop_assert!(m >= -1e-10 * (1.0 + f.gradient(&u).norm() * d.norm()));
    }

    #[test]
    fn coercivity_bound_holds(seed in any::<u64>(), amp in 0.01f64..5.0, k in -2.0f64..=4.0) {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(k)).unwrap();
        let c = f.coercivity().unwrap();
        let u = random_field(&mesh, seed, amp);
        let lower = c.nu * lp_grad_pow(&u, c.p) - c.l;
        prop_assert!(f.energy(&u) >= lower - 1e-12 * (1.0 + lower.abs()));
    }

    #[test]
    fn integrated_quasimonotonicity(seed in any::<u64>(), xi in prop::array::uniform4(-2.0f64..2.0), k in 0.0f64..=8.0) {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let phi = random_field(&mesh, seed, 1.0);
        let xi = Mat2::from_array(xi);
        let margin = quasimonotonicity_margin(&Integrand::g(k), xi, &phi);
        let q4 = quartic_norm(&phi);
        prop_assert!(margin - (8.0 - k) / 8.0 * q4 >= -1e-9 * (1.0 + q4 + margin.abs()));
        prop_assert!(null_lagrangian_term(xi, &phi).abs() <= 1e-12 * (1.0 + q4));
    }
}

#[test]
fn lumped_mass_integrates_constants() {
    for (dim, m) in [(1, 7), (2, 9)] {
        let mesh = build_mesh(dim, 1, m).unwrap();
        let total: f64 = mesh.mass().iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }
}

#[test]
fn scatter_is_adjoint_of_gradient() {
    let mesh = build_mesh(2, 2, 4).unwrap();
    let u = random_field(&mesh, 3, 1.0);
    let g = Mat2::new(0.3, -1.2, 0.5, 2.0);
    for c in 0..mesh.cell_count() {
        let mut out = vec![0.0; mesh.dof_count()];
        mesh.scatter_cell(g, c, &mut out);
        let lhs: f64 = out.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((lhs - g.inner(u.cell_gradient(c))).abs() < 1e-12);
    }
    let _ = Field::zeros(&mesh);
}
