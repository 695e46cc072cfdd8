//! Integral monotonicity and convexity margins for gradient densities, the
//! identity calculus of `g(ξ) = |ξ|⁴ + k(det ξ)²`, and explicit two-scale
//! laminates that witness the failure of integral convexity outside
//! `−2 ≤ k ≤ 4`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::integrands::{g_hessian_form, Integrand, IntegrandError};
use crate::mat2::Mat2;
use crate::mesh::{Field, Mesh};
use crate::report::DiagnosticsReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("laminate needs a 2-component field on the unit square")]
    NotPlanar,
    #[error("invalid laminate spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
}

fn check_pair(psi: &Field, phi: &Field) -> Result<(), AnalyzerError> {
    if psi.same_mesh(phi) {
        Ok(())
    } else {
        Err(AnalyzerError::MeshMismatch)
    }
}

fn cell_sum(psi: &Field, phi: &Field, mut f: impl FnMut(Mat2, Mat2) -> f64) -> f64 {
    let mesh = psi.mesh();
    let area = mesh.cell_area();
    let (a, b) = (psi.values(), phi.values());
    (0..mesh.cell_count())
        .map(|c| area * f(mesh.cell_gradient(a, c), mesh.cell_gradient(b, c)))
        .sum()
}

/// `Σ area·[A(Dψ + Dφ) − A(Dψ)] : Dφ` with `A = Df`.
pub fn monotonicity_margin(ig: &Integrand, psi: &Field, phi: &Field) -> Result<f64, AnalyzerError> {
    check_pair(psi, phi)?;
    Ok(cell_sum(psi, phi, |x, e| (ig.eval_grad_a(x + e) - ig.eval_grad_a(x)).inner(e)))
}

/// The same margin for `ψ` with constant gradient `ξ` (no boundary
/// condition on `ψ`): `Σ area·[A(ξ + Dφ) − A(ξ)] : Dφ`.
pub fn quasimonotonicity_margin(ig: &Integrand, xi: Mat2, phi: &Field) -> f64 {
    let a0 = ig.eval_grad_a(xi);
    cell_sum(phi, phi, |_, e| (ig.eval_grad_a(xi + e) - a0).inner(e))
}

/// `Σ area·det ξ·det Dφ`, which vanishes for zero-boundary `φ`.
pub fn null_lagrangian_term(xi: Mat2, phi: &Field) -> f64 {
    let d = xi.det();
    cell_sum(phi, phi, |_, e| d * e.det())
}

/// `Σ area·|Dφ|⁴`.
pub fn quartic_norm(phi: &Field) -> f64 {
    cell_sum(phi, phi, |_, e| e.norm_sq().powi(2))
}

/// `Σ area·D²f(Dψ)(Dφ, Dφ)`.
pub fn integral_convexity_form(ig: &Integrand, psi: &Field, phi: &Field) -> Result<f64, AnalyzerError> {
    check_pair(psi, phi)?;
    ig.eval_hess_form(Mat2::ZERO, Mat2::ZERO)?;
    let mut err = None;
    let q = cell_sum(psi, phi, |x, e| match ig.eval_hess_form(x, e) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(q),
    }
}

/// `H(ξ) = 4|ξ|⁴ + 32(ξ¹·ξ²)² − 4k(det ξ)²`, the form along the row swap.
pub fn swap_h(k: f64, xi: Mat2) -> f64 {
    let [r1, r2] = [xi.row1(), xi.row2()];
    let dot = r1[0] * r2[0] + r1[1] * r2[1];
    4.0 * xi.norm_sq().powi(2) + 32.0 * dot * dot - 4.0 * k * xi.det().powi(2)
}

/// `G(ξ) = 4|ξ¹|²|ξ²|² + 2k(det ξ)²`, the form along the component split.
pub fn split_g(k: f64, xi: Mat2) -> f64 {
    let [r1, r2] = [xi.row1(), xi.row2()];
    let n1 = r1[0] * r1[0] + r1[1] * r1[1];
    let n2 = r2[0] * r2[0] + r2[1] * r2[1];
    4.0 * n1 * n2 + 2.0 * k * xi.det().powi(2)
}

/// The four laminate targets `diag(±1, ±1)`.
pub const TARGETS: [Mat2; 4] = [
    Mat2 { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 },
    Mat2 { a11: 1.0, a12: 0.0, a21: 0.0, a22: -1.0 },
    Mat2 { a11: -1.0, a12: 0.0, a21: 0.0, a22: -1.0 },
    Mat2 { a11: -1.0, a12: 0.0, a21: 0.0, a22: 1.0 },
];

/// Radius of the target balls in the gradient histogram.
pub const TARGET_RADIUS: f64 = 0.25;

/// Two-scale laminate parameters: coarse period `eps1` in `x₁`, fine
/// period `eps2` in `x₂`, cutoff width `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaminateSpec {
    pub eps1: f64,
    pub eps2: f64,
    pub rho: f64,
}

impl Default for LaminateSpec {
    fn default() -> Self {
        LaminateSpec {
            eps1: 1.0 / 32.0,
            eps2: 1.0 / 256.0,
            rho: 1.0 / 8.0,
        }
    }
}

fn cells_in(len: f64, h: f64) -> Option<usize> {
    let r = len / h;
    let n = r.round();
    (n >= 1.0 && (r - n).abs() <= 1e-9 * r.max(1.0)).then_some(n as usize)
}

impl LaminateSpec {
    /// Every length halved, for use on a mesh of twice the resolution.
    pub fn refined(&self) -> Self {
        LaminateSpec {
            eps1: self.eps1 / 2.0,
            eps2: self.eps2 / 2.0,
            rho: self.rho / 2.0,
        }
    }

    /// Checks `0 < eps2 < eps1 < rho < 1/2`, that all three are multiples of
    /// the cell size `1/m`, that both periods span an even number of cells
    /// and that `eps2` divides `eps1`.
    pub fn validate(&self, resolution: usize) -> Result<(), AnalyzerError> {
        let h = 1.0 / resolution as f64;
        let bad = |s: &str| Err(AnalyzerError::InvalidSpec(s.to_string()));
        if !(self.eps2 > 0.0 && self.eps2 < self.eps1 && self.eps1 < self.rho && self.rho < 0.5) {
            return bad("need 0 < eps2 < eps1 < rho < 1/2");
        }
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("rho", self.rho)] {
            if cells_in(v, h).is_none() {
                return Err(AnalyzerError::InvalidSpec(format!(
                    "{name}={v} is not a positive multiple of the cell size 1/{resolution}"
                )));
            }
        }
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if cells_in(v, h).is_some_and(|n| n % 2 == 1) {
                return Err(AnalyzerError::InvalidSpec(format!(
                    "{name}={v} spans an odd number of cells of size 1/{resolution}; a sawtooth period needs an even number"
                )));
            }
        }
        let ratio = self.eps1 / self.eps2;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return bad("eps2 must divide eps1");
        }
        Ok(())
    }
}

/// `ε/2 − |t mod ε − ε/2|`: slope `+1` then `−1` on each period.
fn saw(t: f64, eps: f64) -> f64 {
    0.5 * eps - ((t.rem_euclid(eps)) - 0.5 * eps).abs()
}

fn cutoff(t: f64, rho: f64) -> f64 {
    (t / rho).min((1.0 - t) / rho).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetHistogram {
    /// Area with gradient within [`TARGET_RADIUS`] of each target.
    pub target_area: [f64; 4],
    pub other_area: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Laminate {
    pub u: Field,
    pub spec: LaminateSpec,
    pub histogram: TargetHistogram,
}

/// The field `u = ζ·(saw(x₁, ε₁), saw(x₂, ε₂))` interpolated at the
/// vertices, where `ζ(x) = ζ₁(x₁)ζ₁(x₂)` is 1 on `[ρ, 1−ρ]²` and affine to 0
/// across the `ρ`-strip.
///
/// Away from the strip `Du = diag(±1, ±1)`; the sign of the first row
/// follows the coarse phase, so `Du ∈ {ξ₁, ξ₂}` where the coarse sawtooth
/// rises and `Du ∈ {ξ₃, ξ₄}` where it falls.
pub fn build_double_laminate(mesh: &Arc<Mesh>, spec: &LaminateSpec) -> Result<Laminate, AnalyzerError> {
    if mesh.dim() != 2 || mesh.components() != 2 {
        return Err(AnalyzerError::NotPlanar);
    }
    spec.validate(mesh.resolution())?;
    let u = Field::from_fn(mesh, |x| {
        let z = cutoff(x[0], spec.rho) * cutoff(x[1], spec.rho);
        [z * saw(x[0], spec.eps1), z * saw(x[1], spec.eps2)]
    });
    let histogram = target_histogram(&u);
    Ok(Laminate { u, spec: *spec, histogram })
}

pub fn target_histogram(u: &Field) -> TargetHistogram {
    let mesh = u.mesh();
    let area = mesh.cell_area();
    let mut target_area = [0.0; 4];
    let mut other_area = 0.0;
    for xi in u.gradients() {
        match TARGETS.iter().position(|t| (xi - *t).norm() <= TARGET_RADIUS) {
            Some(i) => target_area[i] += area,
            None => other_area += area,
        }
    }
    let total: f64 = target_area.iter().sum::<f64>() + other_area;
    TargetHistogram {
        target_area,
        other_area,
        fraction: target_area.iter().sum::<f64>() / total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// `ψ = u`, `φ = (u², u¹)`: the form equals `Σ area·H(Du)`.
    Swap,
    /// `ψ = (u¹, 0)`, `φ = (0, u²)`: the form equals `Σ area·G(Du)`.
    ComponentSplit,
}

impl Recipe {
    pub fn fields(&self, u: &Field) -> (Field, Field) {
        match self {
            Recipe::Swap => (u.clone(), u.swap_components()),
            Recipe::ComponentSplit => (u.component_field(0, 0), u.component_field(1, 1)),
        }
    }

    /// Per-unit-area value of the form on the pure four-target laminate.
    pub fn pure_value(&self, k: f64) -> f64 {
        match self {
            Recipe::Swap => 16.0 - 4.0 * k,
            Recipe::ComponentSplit => 4.0 + 2.0 * k,
        }
    }
}

/// A witness `∫ D²g(Dψ)(Dφ, Dφ) < 0` of the failure of integral convexity.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub k: f64,
    pub recipe: Recipe,
    pub resolution: usize,
    pub spec: LaminateSpec,
    pub q: f64,
    pub q_per_area: f64,
    pub pure_value: f64,
    pub histogram: TargetHistogram,
    #[serde(skip)]
    pub psi: Field,
    #[serde(skip)]
    pub phi: Field,
}

impl Certificate {
    /// Recomputes `Q` from the stored fields.
    pub fn recompute(&self) -> f64 {
        integral_convexity_form(&Integrand::g(self.k), &self.psi, &self.phi).expect("g has a Hessian")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecipeValue {
    pub recipe: Recipe,
    pub q_per_area: f64,
    /// `1 + Σ area·|Dψ|²|Dφ|²`, the magnitude used for the sign tolerance.
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Certificate(Box<Certificate>),
    NoneFound { values: Vec<RecipeValue> },
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SearchOutcome::Certificate(c) => Some(c),
            SearchOutcome::NoneFound { .. } => None,
        }
    }
}

/// Relative threshold below which a negative form value counts as a witness.
pub const SIGN_TOLERANCE: f64 = 1e-9;

/// Builds the laminate and evaluates the swap recipe (for `k > 4`), the
/// component split (for `k < −2`) or both (otherwise). Returns the most
/// negative value as a certificate when it is below `−1e−9·scale`.
pub fn counterexample_search(k: f64, mesh: &Arc<Mesh>, spec: &LaminateSpec) -> Result<SearchOutcome, AnalyzerError> {
    let lam = build_double_laminate(mesh, spec)?;
    let recipes: &[Recipe] = if k > 4.0 {
        &[Recipe::Swap]
    } else if k < -2.0 {
        &[Recipe::ComponentSplit]
    } else {
        &[Recipe::Swap, Recipe::ComponentSplit]
    };
    let ig = Integrand::g(k);
    let mut best: Option<(Recipe, f64, Field, Field)> = None;
    let mut values = Vec::new();
    for &recipe in recipes {
        let (psi, phi) = recipe.fields(&lam.u);
        let q = integral_convexity_form(&ig, &psi, &phi)?;
        let scale = 1.0 + cell_sum(&psi, &phi, |x, e| x.norm_sq() * e.norm_sq());
        values.push(RecipeValue { recipe, q_per_area: q, scale });
        if q < -SIGN_TOLERANCE * scale && best.as_ref().is_none_or(|b| q < b.1) {
            best = Some((recipe, q, psi, phi));
        }
    }
    Ok(match best {
        // the unit square has |Ω| = 1
        Some((recipe, q, psi, phi)) => SearchOutcome::Certificate(Box::new(Certificate {
            k,
            recipe,
            resolution: mesh.resolution(),
            spec: *spec,
            q,
            q_per_area: q,
            pure_value: recipe.pure_value(k),
            histogram: lam.histogram,
            psi,
            phi,
        })),
        None => SearchOutcome::NoneFound { values },
    })
}

fn random_mat(rng: &mut ChaCha8Rng, r: f64) -> Mat2 {
    Mat2::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

/// The closed-form expansion of `(A(ξ+η) − A(ξ)) : η` for `A = Dg`.
pub fn eq_a_polynomial(k: f64, xi: Mat2, eta: Mat2) -> f64 {
    let xe = xi.inner(eta);
    let (n_xi, n_eta) = (xi.norm_sq(), eta.norm_sq());
    let (dx, de) = (xi.det(), eta.det());
    let ec = eta.inner(xi.cof());
    4.0 * n_xi * n_eta + 12.0 * xe * n_eta + 8.0 * xe * xe + 4.0 * n_eta * n_eta
        + 2.0 * k * (2.0 * dx * de + 2.0 * de * de + ec * ec + 3.0 * de * ec)
}

/// Tracks the worst sample of one identity.
struct Worst {
    id: &'static str,
    tol: f64,
    margin: f64,
    at: usize,
}

impl Worst {
    fn new(id: &'static str, tol: f64) -> Self {
        Worst {
            id,
            tol,
            margin: f64::INFINITY,
            at: 0,
        }
    }

    /// Records `|lhs − rhs|/scale` as a negative margin.
    fn eq(&mut self, i: usize, lhs: f64, rhs: f64, scale: f64) {
        self.ge(i, -(lhs - rhs).abs() / scale);
    }

    fn ge(&mut self, i: usize, margin: f64) {
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.at = i;
        }
    }

    fn push(self, r: &mut DiagnosticsReport, seed: u64) {
        r.push(self.id, self.margin, self.tol, format!("seed={seed} worst sample {}", self.at));
    }
}

/// Tolerance of the exact identities, relative to their natural magnitude.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance of the finite-difference derivative checks.
pub const FD_TOL: f64 = 1e-5;

/// Checks the algebraic identities behind the analysis of `g` over `count`
/// seeded samples `ξ, η ∈ [−2, 2]^{2×2}`, `k ∈ [−4, 8]`.
///
/// Exact identities report `−|lhs − rhs|/scale`, inequalities report their
/// slack over `scale`, where `scale` is 1 plus the magnitude of the terms.
pub fn identity_suite(seed: u64, count: usize) -> DiagnosticsReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_norm = Worst::new("identity.conformal_norm", IDENTITY_TOL);
    let mut w_det = Worst::new("identity.conformal_det", IDENTITY_TOL);
    let mut w_inner = Worst::new("identity.conformal_inner", IDENTITY_TOL);
    let mut w_cof = Worst::new("identity.conformal_cof_inner", IDENTITY_TOL);
    let mut w_trace = Worst::new("identity.cof_trace", IDENTITY_TOL);
    let mut w_expand = Worst::new("identity.det_expansion", IDENTITY_TOL);
    let mut w_dn = Worst::new("identity.det_norm", IDENTITY_TOL);
    let mut w_a = Worst::new("identity.gradient_difference", IDENTITY_TOL);
    let mut w_h = Worst::new("identity.swap_h", IDENTITY_TOL);
    let mut w_hc = Worst::new("identity.swap_cof_orthogonal", IDENTITY_TOL);
    let mut w_g = Worst::new("identity.split_g", IDENTITY_TOL);
    let mut w_gd = Worst::new("identity.split_cof_is_det", IDENTITY_TOL);
    let mut w_targets = Worst::new("identity.target_values", IDENTITY_TOL);
    let mut w_fd1 = Worst::new("identity.fd_gradient", FD_TOL);
    let mut w_fd2 = Worst::new("identity.fd_hessian", FD_TOL);

    for i in 0..count.max(1) {
        let xi = random_mat(&mut rng, 2.0);
        let eta = random_mat(&mut rng, 2.0);
        let k: f64 = rng.gen_range(-4.0..=8.0);
        let (nx, ne) = (xi.norm_sq(), eta.norm_sq());
        let s2 = 1.0 + nx + ne;

        let (sx, se) = (xi.conformal_split(), eta.conformal_split());
        w_norm.eq(i, nx, sx.plus.norm_sq() + sx.minus.norm_sq(), s2);
        w_det.eq(i, xi.det(), 0.5 * (sx.plus.norm_sq() - sx.minus.norm_sq()), s2);
        w_inner.eq(i, xi.inner(eta), sx.plus.inner(se.plus) + sx.minus.inner(se.minus), s2);
        w_cof.eq(i, eta.inner(xi.cof()), sx.plus.inner(se.plus) - sx.minus.inner(se.minus), s2);
        w_trace.eq(i, xi.inner(xi.cof()), 2.0 * xi.det(), s2);
        w_expand.eq(i, (xi + eta).det(), xi.det() + eta.det() + eta.inner(xi.cof()), s2);
        w_dn.ge(i, (ne - 2.0 * eta.det().abs()) / s2);

        let ig = Integrand::g(k);
        let s4 = (1.0 + k.abs()) * s2 * s2;
        let lhs = (ig.eval_grad_a(xi + eta) - ig.eval_grad_a(xi)).inner(eta);
        w_a.eq(i, lhs, eq_a_polynomial(k, xi, eta), s4);

        let sw = xi.swap_rows();
        w_h.eq(i, g_hessian_form(k, xi, sw), swap_h(k, xi), s4);
        w_hc.eq(i, sw.inner(xi.cof()), 0.0, s2);
        let psi = Mat2::new(xi.a11, xi.a12, 0.0, 0.0);
        let phi = Mat2::new(0.0, 0.0, xi.a21, xi.a22);
        w_g.eq(i, g_hessian_form(k, psi, phi), split_g(k, xi), s4);
        w_gd.eq(i, phi.inner(psi.cof()), xi.det(), s2);

        let t = TARGETS[i % 4];
        let st = 1.0 + k.abs();
        w_targets.eq(i, swap_h(k, t), 16.0 - 4.0 * k, st);
        w_targets.eq(i, split_g(k, t), 4.0 + 2.0 * k, st);

        // central differences along η
        let h = 1e-5;
        let fd = (ig.eval_f(xi + eta * h) - ig.eval_f(xi - eta * h)) / (2.0 * h);
        let an = ig.eval_grad_a(xi).inner(eta);
        let scale = 1.0 + ig.eval_grad_a(xi).norm() * eta.norm();
        w_fd1.eq(i, fd, an, scale);
        let fd2 = (ig.eval_grad_a(xi + eta * h) - ig.eval_grad_a(xi - eta * h)).inner(eta) / (2.0 * h);
        let an2 = g_hessian_form(k, xi, eta);
        w_fd2.eq(i, fd2, an2, 1.0 + (1.0 + k.abs()) * s2 * ne);
    }

    let mut r = DiagnosticsReport::new();
    for w in [
        w_norm, w_det, w_inner, w_cof, w_trace, w_expand, w_dn, w_a, w_h, w_hc, w_g, w_gd, w_targets, w_fd1, w_fd2,
    ] {
        w.push(&mut r, seed);
    }
    r.constant("samples", count.max(1) as f64);
    r
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplerResult {
    pub k: f64,
    pub count: usize,
    /// `min D²g(ξ)(η, η)/(1 + |ξ|²|η|²)`.
    pub min: f64,
    pub witness_xi: [f64; 4],
    pub witness_eta: [f64; 4],
}

/// Samples `D²g(ξ)(η, η)/(1 + |ξ|²|η|²)` with entries uniform in `[−2, 2]`.
pub fn convexity_sampler(k: f64, count: usize, seed: u64) -> SamplerResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, Mat2::ZERO, Mat2::ZERO);
    for _ in 0..count.max(1) {
        let xi = random_mat(&mut rng, 2.0);
        let eta = random_mat(&mut rng, 2.0);
        let v = g_hessian_form(k, xi, eta) / (1.0 + xi.norm_sq() * eta.norm_sq());
        if v < best.0 {
            best = (v, xi, eta);
        }
    }
    SamplerResult {
        k,
        count: count.max(1),
        min: best.0,
        witness_xi: best.1.to_array(),
        witness_eta: best.2.to_array(),
    }
}
