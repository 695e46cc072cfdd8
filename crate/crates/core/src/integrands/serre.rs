//! Brute-force rank-one coercivity constant of Serre's quadratic form on
//! 3×3 matrices.

use std::f64::consts::PI;

use serde::Serialize;

use crate::mat2::Mat3;

/// `f̃(ξ) = (ξ11−ξ32−ξ23)² + (ξ12−ξ31+ξ13)² + (ξ21−ξ31−ξ13)² + ξ22² + ξ33²`.
pub fn serre_density(x: &Mat3) -> f64 {
    let q1 = x.at(1, 1) - x.at(3, 2) - x.at(2, 3);
    let q2 = x.at(1, 2) - x.at(3, 1) + x.at(1, 3);
    let q3 = x.at(2, 1) - x.at(3, 1) - x.at(1, 3);
    q1 * q1 + q2 * q2 + q3 * q3 + x.at(2, 2).powi(2) + x.at(3, 3).powi(2)
}

#[derive(Debug, Clone, Serialize)]
pub struct SerreGap {
    pub grid: usize,
    /// Minimum on the coarse product grid.
    pub coarse_min: f64,
    /// Minimum after one local refinement; this is the reported constant.
    pub epsilon: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// `b ↦ f̃(a⊗b)` is the quadratic form `bᵀM(a)b`; returns the six distinct
/// entries `(m11, m12, m13, m22, m23, m33)`.
fn form_for(a: [f64; 3]) -> [f64; 6] {
    let [a1, a2, a3] = a;
    let rows = [
        [a1, -a3, -a2],
        [-a3, a1, a1],
        [a2 - a3, 0.0, -a1],
        [0.0, a2, 0.0],
        [0.0, 0.0, a3],
    ];
    let mut m = [[0.0; 3]; 3];
    for r in &rows {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
        }
    }
    [m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]]
}

fn eval_form(m: &[f64; 6], b: [f64; 3]) -> f64 {
    let [b1, b2, b3] = b;
    m[0] * b1 * b1 + m[3] * b2 * b2 + m[5] * b3 * b3 + 2.0 * (m[1] * b1 * b2 + m[2] * b1 * b3 + m[4] * b2 * b3)
}

/// Searches `(θa, φa, θb, φb)` on `axes`, returning the best value and angles.
fn search(axes: [&[f64]; 4]) -> (f64, [f64; 4]) {
    let bs: Vec<(f64, f64, [f64; 3])> = axes[2]
        .iter()
        .flat_map(|&t| axes[3].iter().map(move |&p| (t, p, unit(t, p))))
        .collect();
    let mut best = (f64::INFINITY, [0.0; 4]);
    for &ta in axes[0] {
        for &pa in axes[1] {
            let m = form_for(unit(ta, pa));
            for &(tb, pb, b) in &bs {
                // |a⊗b| = 1 for unit a, b
                let v = eval_form(&m, b);
                if v < best.0 {
                    best = (v, [ta, pa, tb, pb]);
                }
            }
        }
    }
    best
}

/// Minimum of `f̃(a⊗b)/|a⊗b|²` over unit `a, b ∈ ℝ³`.
///
/// Each direction is parametrized by `(θ, φ) ∈ [0,π] × [0,π)`, which covers
/// the sphere up to sign (irrelevant since `f̃` is even). A `grid⁴` product
/// search is followed by one refinement with the same number of points on a
/// box of one coarse spacing around the best node.
pub fn serre_rank_one_gap(grid: usize) -> SerreGap {
    let g = grid.max(2);
    let step = PI / g as f64;
    let theta: Vec<f64> = (0..g).map(|i| (i as f64 + 0.5) * step).collect();
    let phi: Vec<f64> = (0..g).map(|j| j as f64 * step).collect();
    let (coarse, c) = search([&theta, &phi, &theta, &phi]);

    let local = |center: f64| -> Vec<f64> {
        (0..=g).map(|i| center - step + 2.0 * step * i as f64 / g as f64).collect()
    };
    let axes: Vec<Vec<f64>> = c.iter().map(|x| local(*x)).collect();
    let (fine, f) = search([&axes[0], &axes[1], &axes[2], &axes[3]]);
    let (epsilon, best) = if fine <= coarse { (fine, f) } else { (coarse, c) };
    SerreGap {
        grid: g,
        coarse_min: coarse,
        epsilon,
        a: unit(best[0], best[1]),
        b: unit(best[2], best[3]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_is_sum_of_squares_and_matches_form() {
        let a = [0.3, -0.7, 0.2];
        let b = [1.1, 0.4, -0.5];
        let x = Mat3::outer(a, b);
        assert!(serre_density(&x) >= 0.0);
        let m = form_for(a);
        assert!((serre_density(&x) - eval_form(&m, b)).abs() < 1e-14);
    }

    #[test]
    fn e1_e1_candidate() {
        let x = Mat3::outer([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(serre_density(&x), 1.0);
        assert_eq!(x.norm_sq(), 1.0);
        let gap = serre_rank_one_gap(16);
        assert!(gap.epsilon <= 1.0);
        assert!(gap.epsilon >= 0.0);
        assert!(gap.epsilon <= gap.coarse_min);
    }
}
