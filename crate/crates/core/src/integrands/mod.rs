//! Densities `f(x, ξ)` and the discrete functionals they generate.

mod functional;
mod serre;

pub use functional::{assemble_energy, assemble_gradient, DiscreteFunctional};
pub use serre::{serre_density, serre_rank_one_gap, SerreGap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat2::Mat2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrandError {
    #[error("integrand {0} has no second derivative")]
    NoHessian(String),
    #[error("invalid integrand parameter: {0}")]
    InvalidParameter(String),
    #[error("integrand {kind} needs an {needs} gradient, mesh provides {got}")]
    ShapeMismatch {
        kind: String,
        needs: &'static str,
        got: String,
    },
}

/// Lower bound `f(ξ) ≥ ν|ξ|^p − L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub nu: f64,
    pub l: f64,
    pub p: f64,
}

/// A density of the gradient, possibly depending on the point `x`.
pub trait Density: Send + Sync + std::fmt::Debug {
    fn value(&self, x: [f64; 2], xi: Mat2) -> f64;

    /// `A_f(x, ξ) = D_ξ f(x, ξ)`.
    fn gradient(&self, x: [f64; 2], xi: Mat2) -> Mat2;

    /// `D²_ξ f(x, ξ)(η, η)`, when it exists everywhere.
    fn hessian_form(&self, x: [f64; 2], xi: Mat2, eta: Mat2) -> Result<f64, IntegrandError>;

    fn is_convex(&self) -> bool;

    fn coercivity(&self) -> Option<Coercivity>;

    /// Whether `value`/`gradient` read `x`; assembly skips centroids otherwise.
    fn depends_on_x(&self) -> bool {
        true
    }

    /// Checks that the density makes sense for `components × dim` gradients.
    fn check_shape(&self, _components: usize, _dim: usize) -> Result<(), IntegrandError> {
        Ok(())
    }
}

/// The shipped, x-independent densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrand {
    /// `|ξ|^p / p`.
    PDirichlet { p: f64 },
    /// `|ξ|⁴ + k (det ξ)²` on 2×2 matrices.
    GDetSquared { k: f64 },
    /// `½ ξ̂ᵀ C ξ̂` with `ξ̂ = (a11, a12, a21, a22)` and `C` symmetric.
    QuadraticForm { c: [[f64; 4]; 4] },
}

impl Integrand {
    pub fn p_dirichlet(p: f64) -> Result<Integrand, IntegrandError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(IntegrandError::InvalidParameter(format!("p-Dirichlet needs p > 1, got {p}")));
        }
        Ok(Integrand::PDirichlet { p })
    }

    pub fn g(k: f64) -> Integrand {
        Integrand::GDetSquared { k }
    }

    pub fn quadratic_form(c: [[f64; 4]; 4]) -> Result<Integrand, IntegrandError> {
        for i in 0..4 {
            for j in 0..i {
                if c[i][j] != c[j][i] {
                    return Err(IntegrandError::InvalidParameter(format!(
                        "coefficient table not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Integrand::QuadraticForm { c })
    }

    pub fn name(&self) -> String {
        match self {
            Integrand::PDirichlet { p } => format!("p_dirichlet(p={p})"),
            Integrand::GDetSquared { k } => format!("g(k={k})"),
            Integrand::QuadraticForm { .. } => "quadratic_form".to_string(),
        }
    }

    pub fn eval_f(&self, xi: Mat2) -> f64 {
        match self {
            Integrand::PDirichlet { p } => xi.norm_sq().powf(0.5 * p) / p,
            Integrand::GDetSquared { k } => {
                let n2 = xi.norm_sq();
                let d = xi.det();
                n2 * n2 + k * d * d
            }
            Integrand::QuadraticForm { c } => {
                let v = xi.to_array();
                0.5 * quad(c, &v, &v)
            }
        }
    }

    pub fn eval_grad_a(&self, xi: Mat2) -> Mat2 {
        match self {
            Integrand::PDirichlet { p } => {
                let n = xi.norm();
                if n == 0.0 {
                    Mat2::ZERO
                } else {
                    xi * n.powf(p - 2.0)
                }
            }
            Integrand::GDetSquared { k } => xi * (4.0 * xi.norm_sq()) + xi.cof() * (2.0 * k * xi.det()),
            Integrand::QuadraticForm { c } => {
                let v = xi.to_array();
                let mut out = [0.0; 4];
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..4).map(|j| c[i][j] * v[j]).sum();
                }
                Mat2::from_array(out)
            }
        }
    }

    pub fn eval_hess_form(&self, xi: Mat2, eta: Mat2) -> Result<f64, IntegrandError> {
        match self {
            Integrand::PDirichlet { p } if *p == 2.0 => Ok(eta.norm_sq()),
            Integrand::PDirichlet { .. } => Err(IntegrandError::NoHessian(self.name())),
            Integrand::GDetSquared { k } => Ok(g_hessian_form(*k, xi, eta)),
            Integrand::QuadraticForm { c } => {
                let v = eta.to_array();
                Ok(quad(c, &v, &v))
            }
        }
    }

    /// Known convexity; for `g` this is exactly `-2 ≤ k ≤ 4`.
    pub fn is_convex(&self) -> bool {
        match self {
            Integrand::PDirichlet { .. } => true,
            Integrand::GDetSquared { k } => (-2.0..=4.0).contains(k),
            Integrand::QuadraticForm { c } => min_eigenvalue4(c) >= -1e-12,
        }
    }

    pub fn coercivity(&self) -> Option<Coercivity> {
        match self {
            Integrand::PDirichlet { p } => Some(Coercivity { nu: 1.0 / p, l: 0.0, p: *p }),
            Integrand::GDetSquared { k } => {
                // k (det ξ)² ≥ (k/4)|ξ|⁴ when k < 0, from |ξ|² ≥ 2|det ξ|
                let nu = if *k >= 0.0 { 1.0 } else { 1.0 + k / 4.0 };
                (nu > 0.0).then_some(Coercivity { nu, l: 0.0, p: 4.0 })
            }
            Integrand::QuadraticForm { c } => {
                let lmin = min_eigenvalue4(c);
                (lmin > 0.0).then_some(Coercivity { nu: 0.5 * lmin, l: 0.0, p: 2.0 })
            }
        }
    }
}

impl Density for Integrand {
    fn value(&self, _x: [f64; 2], xi: Mat2) -> f64 {
        self.eval_f(xi)
    }

    fn gradient(&self, _x: [f64; 2], xi: Mat2) -> Mat2 {
        self.eval_grad_a(xi)
    }

    fn hessian_form(&self, _x: [f64; 2], xi: Mat2, eta: Mat2) -> Result<f64, IntegrandError> {
        self.eval_hess_form(xi, eta)
    }

    fn is_convex(&self) -> bool {
        Integrand::is_convex(self)
    }

    fn coercivity(&self) -> Option<Coercivity> {
        Integrand::coercivity(self)
    }

    fn depends_on_x(&self) -> bool {
        false
    }

    fn check_shape(&self, components: usize, dim: usize) -> Result<(), IntegrandError> {
        if matches!(self, Integrand::GDetSquared { .. }) && (components != 2 || dim != 2) {
            return Err(IntegrandError::ShapeMismatch {
                kind: self.name(),
                needs: "2x2",
                got: format!("{components}x{dim}"),
            });
        }
        Ok(())
    }
}

/// `D²g(ξ)(η,η) = 8(ξ:η)² + 4|ξ|²|η|² + 2k(η:cof ξ)² + 4k det ξ det η`.
pub fn g_hessian_form(k: f64, xi: Mat2, eta: Mat2) -> f64 {
    let xe = xi.inner(eta);
    let ec = eta.inner(xi.cof());
    8.0 * xe * xe + 4.0 * xi.norm_sq() * eta.norm_sq() + 2.0 * k * ec * ec + 4.0 * k * xi.det() * eta.det()
}

fn quad(c: &[[f64; 4]; 4], a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| (0..4).map(|j| a[i] * c[i][j] * b[j]).sum::<f64>()).sum()
}

/// Smallest eigenvalue of a symmetric 4×4 matrix by cyclic Jacobi sweeps.
fn min_eigenvalue4(c: &[[f64; 4]; 4]) -> f64 {
    let mut a = *c;
    for _ in 0..64 {
        let off: f64 = (0..4).flat_map(|i| (0..4).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..4).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng) -> Mat2 {
        Mat2::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
    }

    #[test]
    fn eval_f_examples() {
        for k in [-1.0, 0.0, 3.0] {
            assert_eq!(Integrand::g(k).eval_f(Mat2::IDENTITY), 4.0 + k);
        }
        assert_eq!(Integrand::g(4.0).eval_f(Mat2::IDENTITY), 8.0);
        assert_eq!(Integrand::p_dirichlet(2.0).unwrap().eval_f(Mat2::IDENTITY), 1.0);
        assert_eq!(Integrand::g(8.0).eval_f(Mat2::diag(1.0, -1.0)), 12.0);
    }

    #[test]
    fn grad_examples() {
        let k = 1.5;
        assert_eq!(Integrand::g(k).eval_grad_a(Mat2::IDENTITY), Mat2::IDENTITY * (8.0 + 2.0 * k));
        let a = Integrand::p_dirichlet(4.0).unwrap().eval_grad_a(Mat2::IDENTITY);
        assert!((a - Mat2::IDENTITY * 2.0).max_abs() < 1e-15);
        assert_eq!(Integrand::p_dirichlet(1.5).unwrap().eval_grad_a(Mat2::ZERO), Mat2::ZERO);
    }

    #[test]
    fn grad_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let step = 1e-5;
        for ig in [Integrand::g(3.0), Integrand::p_dirichlet(3.0).unwrap(), Integrand::g(-1.5)] {
            for _ in 0..50 {
                let xi = rand_mat(&mut rng);
                let a = ig.eval_grad_a(xi).to_array();
                for e in 0..4 {
                    let mut d = [0.0; 4];
                    d[e] = step;
                    let dm = Mat2::from_array(d);
                    let fd = (ig.eval_f(xi + dm) - ig.eval_f(xi - dm)) / (2.0 * step);
                    let rel = (fd - a[e]).abs() / (1.0 + a[e].abs());
                    assert!(rel <= 1e-6, "{}: rel err {rel}", ig.name());
                }
            }
        }
    }

    #[test]
    fn hessian_examples() {
        let k = 2.5;
        let h = Integrand::g(k).eval_hess_form(Mat2::IDENTITY, Mat2::IDENTITY).unwrap();
        assert_eq!(h, 48.0 + 12.0 * k);
        let eta = Mat2::new(1.0, 2.0, 0.5, 1.0);
        assert_eq!(eta.det(), 0.0);
        assert_eq!(Integrand::g(k).eval_hess_form(Mat2::ZERO, eta).unwrap(), 0.0);
        assert!(matches!(
            Integrand::p_dirichlet(3.0).unwrap().eval_hess_form(Mat2::IDENTITY, eta),
            Err(IntegrandError::NoHessian(_))
        ));
    }

    #[test]
    fn hessian_matches_second_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = 1e-3;
        for k in [-2.0, 0.0, 3.0, 8.0] {
            let ig = Integrand::g(k);
            for _ in 0..100 {
                let xi = rand_mat(&mut rng);
                let eta = rand_mat(&mut rng);
                let exact = ig.eval_hess_form(xi, eta).unwrap();
                let fd = (ig.eval_f(xi + eta * t) - 2.0 * ig.eval_f(xi) + ig.eval_f(xi - eta * t)) / (t * t);
                // g is quartic: the second difference is exact up to O(t²)|η|⁴ and roundoff
                let rel = (fd - exact).abs() / (1.0 + exact.abs() + eta.norm_sq().powi(2));
                assert!(rel <= 1e-5, "k={k}: rel err {rel}");
            }
        }
    }

    #[test]
    fn convexity_flags() {
        assert!(Integrand::g(-2.0).is_convex());
        assert!(Integrand::g(4.0).is_convex());
        assert!(!Integrand::g(4.01).is_convex());
        assert!(!Integrand::g(-2.01).is_convex());
        assert!(Integrand::p_dirichlet(1.5).unwrap().is_convex());
        let mut c = [[0.0; 4]; 4];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        assert!(Integrand::quadratic_form(c).unwrap().is_convex());
        c[0][1] = 2.0;
        c[1][0] = 2.0;
        assert!(!Integrand::quadratic_form(c).unwrap().is_convex());
        c[1][0] = 1.0;
        assert!(Integrand::quadratic_form(c).is_err());
    }

    #[test]
    fn jacobi_min_eigenvalue() {
        let c = [
            [2.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 5.0, 0.0],
            [0.0, 0.0, 0.0, 3.0],
        ];
        assert!((min_eigenvalue4(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_dirichlet_rejects_small_p() {
        assert!(Integrand::p_dirichlet(1.0).is_err());
    }

    #[test]
    fn pointwise_coercivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ig in [Integrand::g(-3.0), Integrand::g(-1.0), Integrand::g(6.0), Integrand::p_dirichlet(2.5).unwrap()] {
            let c = ig.coercivity().unwrap();
            for _ in 0..1000 {
                let xi = rand_mat(&mut rng);
                assert!(ig.eval_f(xi) >= c.nu * xi.norm().powf(c.p) - c.l - 1e-12);
            }
        }
        assert!(Integrand::g(-4.0).coercivity().is_none());
    }
}
