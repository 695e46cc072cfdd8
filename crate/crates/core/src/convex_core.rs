//! Resolvent, Yosida approximation and Moreau envelope of a convex discrete
//! functional in the lumped L² Hilbert space.
//!
//! For `λ > 0` the resolvent `J_λ(w)` is the unique minimizer of
//! `Φ(u) = (1/2λ)‖u − w‖² + I_h(u)`, the Yosida approximation is
//! `A_λ(w) = (w − J_λ(w))/λ` and the envelope is `I_λ(w) = Φ(J_λ(w))`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::integrands::DiscreteFunctional;
use crate::mesh::{random_field, Field};
use crate::report::DiagnosticsReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxError {
    #[error("functional {0} is not known to be convex; prox may be nonconvex")]
    NonConvex(String),
    #[error("resolvent needs lambda > 0, got {0}")]
    BadLambda(f64),
    #[error("resolvent did not converge after {iterations} iterations (kkt residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone)]
pub struct ProxResult {
    /// `J_λ(w)`.
    pub j: Field,
    /// `A_λ(w) = (w − J)/λ`.
    pub a: Field,
    /// `I_λ(w) = (λ/2)‖A‖² + I_h(J)`.
    pub envelope: f64,
    /// `I_h(J)`.
    pub energy_at_j: f64,
    pub iterations: usize,
    /// `‖∇I_h(J) + (J − w)/λ‖`.
    pub kkt_residual: f64,
}

/// Accelerated gradient descent with backtracking on the strongly convex
/// prox objective.
///
/// The strong-convexity modulus `1/λ` is known, so the momentum is the
/// constant-β scheme for strongly convex problems with the current Lipschitz
/// estimate; the estimate only grows (by doubling) when the sufficient
/// decrease test fails. Momentum is reset whenever the step direction and
/// the last displacement disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxSolver {
    /// Stop once the KKT residual is below `tol·(1 + ‖w‖)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProxSolver {
    fn default() -> Self {
        ProxSolver {
            tol: 1e-9,
            max_iter: 100_000,
        }
    }
}

impl ProxSolver {
    pub fn with_tol(tol: f64) -> Self {
        ProxSolver {
            tol,
            ..Default::default()
        }
    }

    pub fn solve(&self, f: &DiscreteFunctional, w: &Field, lambda: f64) -> Result<ProxResult, ProxError> {
        self.solve_from(f, w, lambda, w)
    }

    /// Like [`solve`](Self::solve), warm-started from `guess`.
    pub fn solve_from(
        &self,
        f: &DiscreteFunctional,
        w: &Field,
        lambda: f64,
        guess: &Field,
    ) -> Result<ProxResult, ProxError> {
        if !f.is_convex() {
            return Err(ProxError::NonConvex(f.label().to_string()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ProxError::BadLambda(lambda));
        }
        let inv_lambda = 1.0 / lambda;
        let target = self.tol * (1.0 + w.norm());
        let objective = |u: &Field| u.sub(w).norm_sq() * 0.5 * inv_lambda + f.energy(u);

        let mut lip = inv_lambda;
        let mut x = guess.clone();
        let mut y = guess.clone();
        let mut residual = f64::INFINITY;
        for it in 0..self.max_iter {
            let (e_y, grad_i) = f.energy_and_gradient(&y);
            let diff = y.sub(w);
            let phi_y = 0.5 * inv_lambda * diff.norm_sq() + e_y;
            let g = grad_i.axpy(inv_lambda, &diff);
            let g_sq = g.norm_sq();
            residual = g_sq.sqrt();
            if residual <= target {
                return Ok(self.finish(f, w, lambda, y, e_y, residual, it));
            }
            let slack = 1e-13 * (1.0 + phi_y.abs());
            let x_new = loop {
                let cand = y.axpy(-1.0 / lip, &g);
                if objective(&cand) <= phi_y - 0.5 * g_sq / lip + slack {
                    break cand;
                }
                lip *= 2.0;
            };
            let step = x_new.sub(&x);
            if g.dot(&step) > 0.0 {
                y = x_new.clone();
            } else {
                let sq = (inv_lambda / lip).sqrt();
                let beta = (1.0 - sq) / (1.0 + sq);
                y = x_new.axpy(beta, &step);
            }
            x = x_new;
        }
        Err(ProxError::NotConverged {
            iterations: self.max_iter,
            residual,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        _f: &DiscreteFunctional,
        w: &Field,
        lambda: f64,
        j: Field,
        energy_at_j: f64,
        kkt_residual: f64,
        iterations: usize,
    ) -> ProxResult {
        let a = w.sub(&j).scale(1.0 / lambda);
        let envelope = 0.5 * lambda * a.norm_sq() + energy_at_j;
        ProxResult {
            j,
            a,
            envelope,
            energy_at_j,
            iterations,
            kkt_residual,
        }
    }
}

/// `J_λ(w)`, `A_λ(w)` and `I_λ(w)` with the default iteration cap.
pub fn resolvent(f: &DiscreteFunctional, w: &Field, lambda: f64, tol: f64) -> Result<ProxResult, ProxError> {
    ProxSolver::with_tol(tol).solve(f, w, lambda)
}

/// `A⁰(w)`: with `I_h` differentiable the subdifferential is `{∇I_h(w)}`.
pub fn minimal_section(f: &DiscreteFunctional, w: &Field) -> Field {
    f.gradient(w)
}

#[derive(Debug, Clone, Serialize)]
pub struct MoreauReport {
    /// Max over directions `d` of `|FD − (A_λ, d)| / (‖A_λ‖‖d‖)`.
    pub fd_max_rel_err: f64,
    /// Min over probes of `½(I_λ(w₁) + I_λ(w₂)) − I_λ((w₁+w₂)/2)`.
    pub midpoint_margin: f64,
    /// `I_λ(w) − I(J_λ(w))`.
    pub sandwich_lower: f64,
    /// `I(w) − I_λ(w)`.
    pub sandwich_upper: f64,
}

pub const MOREAU_DIRECTIONS: usize = 10;
const MOREAU_PROBES: usize = 4;

/// Checks `I_λ' = A_λ` by central differences, convexity of `I_λ` at
/// midpoints, and `I(J_λ w) ≤ I_λ(w) ≤ I(w)`.
pub fn moreau_gradient_check(
    f: &DiscreteFunctional,
    w: &Field,
    lambda: f64,
    solver: &ProxSolver,
    seed: u64,
) -> Result<MoreauReport, ProxError> {
    let base = solver.solve(f, w, lambda)?;
    let scale = if w.norm() > 0.0 { w.norm() } else { 1.0 };
    let t = 1e-3;
    let a_norm = base.a.norm();
    let mut fd_max_rel_err = 0.0_f64;
    for i in 0..MOREAU_DIRECTIONS {
        let d = random_field(w.mesh(), seed.wrapping_add(i as u64), 1.0);
        let d = d.scale(scale / d.norm());
        let plus = solver.solve_from(f, &w.axpy(t, &d), lambda, &base.j)?;
        let minus = solver.solve_from(f, &w.axpy(-t, &d), lambda, &base.j)?;
        let fd = (plus.envelope - minus.envelope) / (2.0 * t);
        let an = base.a.dot(&d);
        let denom = a_norm * d.norm();
        let err = (fd - an).abs();
        let rel = if denom > 0.0 { err / denom } else { err };
        fd_max_rel_err = fd_max_rel_err.max(rel);
    }

    let mut midpoint_margin = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    for _ in 0..MOREAU_PROBES {
        use rand::Rng;
        let s: u64 = rng.gen();
        let p = random_field(w.mesh(), s, 1.0);
        let p = p.scale(0.5 * scale / p.norm());
        let w1 = w.add(&p);
        let w2 = w.sub(&p);
        let e1 = solver.solve_from(f, &w1, lambda, &base.j)?.envelope;
        let e2 = solver.solve_from(f, &w2, lambda, &base.j)?.envelope;
        midpoint_margin = midpoint_margin.min(0.5 * (e1 + e2) - base.envelope);
    }

    Ok(MoreauReport {
        fd_max_rel_err,
        midpoint_margin,
        sandwich_lower: base.envelope - base.energy_at_j,
        sandwich_upper: f.energy(w) - base.envelope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct YosidaPairReport {
    /// `‖w − w̃‖ − ‖J_λ w − J_λ w̃‖`.
    pub nonexpansive: f64,
    /// `‖w − w̃‖/λ − ‖A_λ w − A_λ w̃‖`.
    pub lipschitz: f64,
    /// `(A_λ w − A_λ w̃, w − w̃)`.
    pub monotone: f64,
    /// `‖J_λ w − J_λ w̃‖ / ‖w − w̃‖`, or 0 when `w = w̃`.
    pub contraction_factor: f64,
}

pub fn yosida_pair_checks(
    f: &DiscreteFunctional,
    w: &Field,
    w_tilde: &Field,
    lambda: f64,
    solver: &ProxSolver,
) -> Result<YosidaPairReport, ProxError> {
    let r = solver.solve(f, w, lambda)?;
    let rt = solver.solve_from(f, w_tilde, lambda, &r.j)?;
    Ok(pair_margins(w, w_tilde, lambda, &r, &rt))
}

pub(crate) fn pair_margins(w: &Field, wt: &Field, lambda: f64, r: &ProxResult, rt: &ProxResult) -> YosidaPairReport {
    let dw = w.sub(wt);
    let dw_norm = dw.norm();
    let dj = r.j.sub(&rt.j).norm();
    let da = r.a.sub(&rt.a);
    YosidaPairReport {
        nonexpansive: dw_norm - dj,
        lipschitz: dw_norm / lambda - da.norm(),
        monotone: da.dot(&dw),
        contraction_factor: if dw_norm > 0.0 { dj / dw_norm } else { 0.0 },
    }
}

/// Margins for the `λ → 0` behaviour over a decreasing `lambdas` ladder:
/// `‖J_λ w − w‖ ≤ λ‖A⁰w‖`, `‖A_λ w‖ ≤ ‖A⁰ w‖`, `I_λ(w)` nondecreasing and
/// bounded by `I(w)`, and `‖A_λ w − A⁰ w‖` decreasing.
pub fn lambda_ladder_checks(
    f: &DiscreteFunctional,
    w: &Field,
    lambdas: &[f64],
    solver: &ProxSolver,
    tolerance: f64,
) -> Result<DiagnosticsReport, ProxError> {
    let a0 = minimal_section(f, w);
    let a0_norm = a0.norm();
    let energy = f.energy(w);
    let mut report = DiagnosticsReport::new();
    report.constant("a0_norm", a0_norm);
    report.constant("energy", energy);
    let mut prev: Option<(f64, f64)> = None;
    for &lambda in lambdas {
        let r = solver.solve(f, w, lambda)?;
        let ctx = format!("lambda={lambda:e}");
        let dist = r.j.sub(w).norm();
        report.push("ladder.resolvent_distance", lambda * a0_norm * (1.0 + 1e-6) - dist, tolerance, ctx.clone());
        report.push("ladder.yosida_bound", a0_norm - r.a.norm(), tolerance, ctx.clone());
        report.push("ladder.envelope_below_energy", energy - r.envelope, tolerance, ctx.clone());
        let gap = r.a.sub(&a0).norm();
        if let Some((env_prev, gap_prev)) = prev {
            report.push("ladder.envelope_monotone", r.envelope - env_prev, tolerance, ctx.clone());
            report.push("ladder.yosida_to_minimal_section", gap_prev - gap, tolerance, ctx);
        }
        prev = Some((r.envelope, gap));
    }
    Ok(report)
}

/// Parameters of [`resolvent_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub pairs: usize,
    /// Pairs whose first point also gets the finite-difference envelope check.
    pub fd_points: usize,
    /// Uniform amplitude of the random interior values.
    pub amplitude: f64,
    /// `λ` is log-uniform in `[lambda_min, lambda_max]`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub seed: u64,
    pub tolerance: f64,
    /// Required bound on the relative finite-difference error.
    pub fd_tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            pairs: 50,
            fd_points: 5,
            amplitude: 0.01,
            lambda_min: 1e-3,
            lambda_max: 1e-2,
            seed: 0,
            tolerance: 1e-8,
            fd_tolerance: 1e-5,
        }
    }
}

/// Random-pair checks of nonexpansiveness, the `1/λ`-Lipschitz bound,
/// monotonicity, `‖A_λ‖ ≤ ‖A⁰‖`, the envelope sandwich
/// `I(J_λ w) ≤ I_λ(w) ≤ I(w)`, midpoint convexity of `I_λ` and `∇I_λ = A_λ`.
///
/// Each id carries the worst margin over all pairs.
pub fn resolvent_suite(
    f: &DiscreteFunctional,
    cfg: &SuiteConfig,
    solver: &ProxSolver,
) -> Result<DiagnosticsReport, ProxError> {
    use rand::Rng;
    let mesh = f.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: BTreeMap<&'static str, (f64, String)> = BTreeMap::new();
    let mut note = |id: &'static str, margin: f64, ctx: &str| {
        let e = worst.entry(id).or_insert((f64::INFINITY, String::new()));
        if margin < e.0 || margin.is_nan() {
            *e = (margin, ctx.to_string());
        }
    };
    let (lo, hi) = (cfg.lambda_min.ln(), cfg.lambda_max.ln());
    for i in 0..cfg.pairs {
        let lambda = (lo + (hi - lo) * rng.gen::<f64>()).exp();
        let w = random_field(mesh, rng.gen(), cfg.amplitude);
        let wt = random_field(mesh, rng.gen(), cfg.amplitude);
        let ctx = format!("{} pair {i} lambda={lambda:.4e}", f.label());
        let r = solver.solve(f, &w, lambda)?;
        let rt = solver.solve_from(f, &wt, lambda, &r.j)?;
        let m = pair_margins(&w, &wt, lambda, &r, &rt);
        note("prox.nonexpansive", m.nonexpansive, &ctx);
        note("prox.lipschitz", m.lipschitz, &ctx);
        note("prox.monotone", m.monotone, &ctx);
        for (x, rx) in [(&w, &r), (&wt, &rt)] {
            note("prox.yosida_bound", minimal_section(f, x).norm() - rx.a.norm(), &ctx);
            note("prox.envelope_lower", rx.envelope - rx.energy_at_j, &ctx);
            note("prox.envelope_upper", f.energy(x) - rx.envelope, &ctx);
        }
        if i < cfg.fd_points {
            let mr = moreau_gradient_check(f, &w, lambda, solver, rng.gen())?;
            note("prox.envelope_gradient", cfg.fd_tolerance - mr.fd_max_rel_err, &ctx);
            note("prox.envelope_midpoint", mr.midpoint_margin, &ctx);
        }
    }
    let mut report = DiagnosticsReport::new();
    for (id, (margin, ctx)) in worst {
        let tol = if id == "prox.envelope_gradient" { 0.0 } else { cfg.tolerance };
        report.push(id, margin, tol, ctx);
    }
    report.constant("tolerance", cfg.tolerance);
    report.constant("fd_tolerance", cfg.fd_tolerance);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrands::Integrand;
    use crate::mesh::build_mesh;

    #[test]
    fn quadratic_closed_form() {
        let mesh = build_mesh(2, 2, 8).unwrap();
        let f = DiscreteFunctional::half_squared_l2(&mesh);
        let w = random_field(&mesh, 3, 1.0);
        let lambda = 0.3;
        let r = resolvent(&f, &w, lambda, 1e-12).unwrap();
        let expect = w.scale(1.0 / (1.0 + lambda));
        assert!(r.j.sub(&expect).norm() <= 1e-10 * expect.norm());
        assert!(r.a.sub(&expect).norm() <= 1e-10 * expect.norm());
        let env = w.norm_sq() / (2.0 * (1.0 + lambda));
        assert!((r.envelope - env).abs() <= 1e-10 * env);
    }

    #[test]
    fn internal_identities_hold() {
        let mesh = build_mesh(2, 2, 8).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(2.0)).unwrap();
        let w = random_field(&mesh, 5, 0.1);
        let lambda = 0.05;
        let r = resolvent(&f, &w, lambda, 1e-9).unwrap();
        assert_eq!(r.a, w.sub(&r.j).scale(1.0 / lambda));
        let rhs = 0.5 * lambda * r.a.norm_sq() + f.energy(&r.j);
        assert!((r.envelope - rhs).abs() <= 1e-10 * (1.0 + r.envelope.abs()));
        let kkt = f.gradient(&r.j).axpy(1.0 / lambda, &r.j.sub(&w)).norm();
        assert!(kkt <= 1e-9 * (1.0 + w.norm()));
    }

    #[test]
    fn refuses_nonconvex_and_bad_lambda() {
        let mesh = build_mesh(2, 2, 4).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(8.0)).unwrap();
        let w = random_field(&mesh, 1, 0.1);
        let err = resolvent(&f, &w, 0.1, 1e-9).unwrap_err();
        assert!(matches!(err, ProxError::NonConvex(_)));
        assert!(err.to_string().contains("prox may be nonconvex"));
        let f = DiscreteFunctional::new(&mesh, Integrand::g(1.0)).unwrap();
        assert_eq!(resolvent(&f, &w, 0.0, 1e-9).unwrap_err(), ProxError::BadLambda(0.0));
    }

    #[test]
    fn reports_non_convergence() {
        let mesh = build_mesh(2, 2, 8).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(4.0)).unwrap();
        let w = random_field(&mesh, 2, 0.2);
        let solver = ProxSolver { tol: 1e-14, max_iter: 3 };
        assert!(matches!(solver.solve(&f, &w, 1.0), Err(ProxError::NotConverged { iterations: 3, .. })));
    }

    #[test]
    fn minimal_section_of_quadratic_is_identity() {
        let mesh = build_mesh(2, 2, 4).unwrap();
        let w = random_field(&mesh, 8, 1.0);
        assert_eq!(minimal_section(&DiscreteFunctional::half_squared_l2(&mesh), &w), w);
    }

    #[test]
    fn equal_pair_has_zero_margins() {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(3.0)).unwrap();
        let w = random_field(&mesh, 4, 0.1);
        let r = yosida_pair_checks(&f, &w, &w, 0.1, &ProxSolver::default()).unwrap();
        assert_eq!(r.nonexpansive, 0.0);
        assert_eq!(r.lipschitz, 0.0);
        assert_eq!(r.monotone, 0.0);
    }

    #[test]
    fn quadratic_contraction_factor() {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let f = DiscreteFunctional::half_squared_l2(&mesh);
        let w = random_field(&mesh, 4, 1.0);
        let wt = random_field(&mesh, 5, 1.0);
        let lambda = 0.25;
        let r = yosida_pair_checks(&f, &w, &wt, lambda, &ProxSolver::with_tol(1e-13)).unwrap();
        assert!((r.contraction_factor - 1.0 / (1.0 + lambda)).abs() < 1e-10);
    }

    #[test]
    fn quadratic_moreau_fd() {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let f = DiscreteFunctional::half_squared_l2(&mesh);
        let w = random_field(&mesh, 6, 1.0);
        let r = moreau_gradient_check(&f, &w, 0.2, &ProxSolver::with_tol(1e-12), 1).unwrap();
        assert!(r.fd_max_rel_err <= 1e-8, "{}", r.fd_max_rel_err);
        assert!(r.midpoint_margin >= 0.0);
        assert!(r.sandwich_lower >= -1e-10 && r.sandwich_upper >= -1e-10);
    }

    #[test]
    fn suite_reports_worst_margin_per_property() {
        let mesh = build_mesh(2, 2, 6).unwrap();
        let f = DiscreteFunctional::new(&mesh, Integrand::g(1.0)).unwrap();
        let cfg = SuiteConfig {
            pairs: 6,
            fd_points: 2,
            amplitude: 0.05,
            ..SuiteConfig::default()
        };
        let r = resolvent_suite(&f, &cfg, &ProxSolver::default()).unwrap();
        assert!(r.all_pass(), "{:?}", r.first_failure());
        let ids: Vec<&str> = r.checks.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "prox.envelope_gradient",
                "prox.envelope_lower",
                "prox.envelope_midpoint",
                "prox.envelope_upper",
                "prox.lipschitz",
                "prox.monotone",
                "prox.nonexpansive",
                "prox.yosida_bound"
            ]
        );
        assert_eq!(r, resolvent_suite(&f, &cfg, &ProxSolver::default()).unwrap());
    }
}
