use std::f64::consts::PI;

use gradflow::flow::{minimizing_movements, yosida_flow, Scheme};
use gradflow::mesh::build_mesh;
use gradflow::{DiscreteFunctional, Field, Integrand};

#[test]
fn schemes_agree_as_parameters_shrink() {
    let mesh = build_mesh(2, 2, 8).unwrap();
    let f = DiscreteFunctional::new(&mesh, Integrand::p_dirichlet(4.0).unwrap()).unwrap();
    let u0 = Field::from_fn(&mesh, |x| [0.2 * (PI * x[0]).sin() * (PI * x[1]).sin(), 0.1 * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin()]);
    let mut dists = Vec::new();
    for s in [0.04, 0.02, 0.01] {
        let mm = minimizing_movements(&f, &u0, s, 0.4).unwrap();
        let yo = yosida_flow(&f, &u0, s, s / 4.0, 0.4).unwrap();
        assert!(matches!(mm.scheme, Scheme::MinimizingMovements { .. }));
        assert_eq!(mm.horizon(), yo.horizon());
        dists.push(mm.final_state.sub(&yo.final_state).norm());
    }
    assert!(dists[0] > dists[1] && dists[1] > dists[2], "{dists:?}");
    assert!((dists[1] / dists[2]).log2() >= 0.5);
}

#[test]
fn yosida_speed_never_exceeds_initial_speed() {
    let mesh = build_mesh(2, 2, 8).unwrap();
    let f = DiscreteFunctional::new(&mesh, Integrand::g(-2.0)).unwrap();
    let u0 = Field::from_fn(&mesh, |x| [0.3 * (PI * x[0]).sin() * (PI * x[1]).sin(), 0.0]);
    let t = yosida_flow(&f, &u0, 0.02, 0.005, 0.3).unwrap();
    let v0 = t.velocities[0];
    assert!(t.velocities.iter().all(|v| *v <= v0 * (1.0 + 1e-6) + 1e-12));
    assert!(v0 <= t.initial_slope);
}
