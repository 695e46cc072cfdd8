//! Independent check of the rank-one gap of Serre's form: for each unit `a`
//! the map `b ↦ f̃(a⊗b)` is a quadratic form, so the gap is the minimum over
//! the sphere of its smallest eigenvalue.

use gradflow::integrands::{serre_density, serre_rank_one_gap};
use gradflow::Mat3;

fn form_matrix(a: [f64; 3]) -> [[f64; 3]; 3] {
    // M_ij = f̃(a⊗(e_i+e_j)) polarization
    let e = |i: usize| {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        v
    };
    let q = |b: [f64; 3]| serre_density(&Mat3::outer(a, b));
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = e(i);
            s[j] += 1.0;
            let mut d = e(i);
            d[j] -= 1.0;
            m[i][j] = 0.25 * (q(s) - q(d));
        }
    }
    m
}

/// Smallest eigenvalue of a symmetric 3×3 matrix (trigonometric formula).
fn min_eig(m: [[f64; 3]; 3]) -> f64 {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return q;
    }
    let mut b = m;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (*x - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

fn sphere(t: f64, p: f64) -> [f64; 3] {
    [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
}

fn oracle() -> f64 {
    let n = 400;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=n {
        for j in 0..2 * n {
            let (t, p) = (std::f64::consts::PI * i as f64 / n as f64, std::f64::consts::PI * j as f64 / n as f64);
            let v = min_eig(form_matrix(sphere(t, p)));
            if v < best.0 {
                best = (v, t, p);
            }
        }
    }
    // coordinate-wise golden refinement
    let (mut v, mut t, mut p) = best;
    let mut h = std::f64::consts::PI / n as f64;
    while h > 1e-10 {
        let mut moved = false;
        for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let w = min_eig(form_matrix(sphere(t + dt, p + dp)));
            if w < v {
                (v, t, p, moved) = (w, t + dt, p + dp, true);
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    v
}

#[test]
fn gap_matches_eigenvalue_oracle() {
    let eps = oracle();
    assert!(eps > 0.03 && eps < 0.05, "oracle {eps}");
    let gap = serre_rank_one_gap(64);
    assert!(gap.epsilon > 0.0);
    // a grid search can only overestimate the minimum
    assert!(gap.epsilon >= eps - 1e-12);
    assert!(gap.epsilon - eps <= 1e-3, "grid {} oracle {eps}", gap.epsilon);
    let x = Mat3::outer(gap.a, gap.b);
    assert!((serre_density(&x) / x.norm_sq() - gap.epsilon).abs() < 1e-12);
}
