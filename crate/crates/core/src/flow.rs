//! Evolution schemes for `u′ = −∇I_h(u)` and the semigroup diagnostics.
//!
//! Two schemes are provided: minimizing movements `uⁿ⁺¹ = J_τ(uⁿ)` and the
//! Yosida-regularized ODE `u′ = −A_λ(u)` integrated with classical RK4.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::convex_core::{minimal_section, ProxError, ProxSolver};
use crate::integrands::DiscreteFunctional;
use crate::mesh::{lp_grad, Field};
use crate::report::DiagnosticsReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("flow requires convex integrand (−2≤k≤4); {0} is not convex")]
    NonConvex(String),
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("time step dt={dt} exceeds lambda/4={limit}")]
    UnstableStep { dt: f64, limit: f64 },
    #[error("horizon T={horizon} is shorter than the step {step}")]
    ShortHorizon { horizon: f64, step: f64 },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("test function has {got} samples, trajectory has {expected} time nodes")]
    GridMismatch { expected: usize, got: usize },
    #[error("trajectory keeps every {0}th state; this check needs all of them")]
    Thinned(usize),
    #[error("direct minimization stalled after {iterations} iterations (gradient norm {residual:e})")]
    MinimizerStalled { iterations: usize, residual: f64 },
    #[error(transparent)]
    Prox(#[from] ProxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    MinimizingMovements { tau: f64 },
    Yosida { lambda: f64, dt: f64 },
}

impl Scheme {
    /// Spacing of the time grid.
    pub fn step(&self) -> f64 {
        match *self {
            Scheme::MinimizingMovements { tau } => tau,
            Scheme::Yosida { dt, .. } => dt,
        }
    }

    /// `τ` for minimizing movements, `λ` for the Yosida flow.
    pub fn parameter(&self) -> f64 {
        match *self {
            Scheme::MinimizingMovements { tau } => tau,
            Scheme::Yosida { lambda, .. } => lambda,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::MinimizingMovements { .. } => "mm",
            Scheme::Yosida { .. } => "yosida",
        }
    }

    fn label(&self) -> String {
        match *self {
            Scheme::MinimizingMovements { tau } => format!("mm(tau={tau})"),
            Scheme::Yosida { lambda, dt } => format!("yosida(lambda={lambda},dt={dt})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub solver: ProxSolver,
    /// Upper bound on stored snapshots; the stride is chosen to respect it.
    pub max_snapshots: usize,
    /// When set, `‖uⁿ − reference‖` is recorded at every step.
    pub reference: Option<Field>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            solver: ProxSolver::default(),
            max_snapshots: 200,
            reference: None,
        }
    }
}

impl FlowOptions {
    /// Keeps every state.
    pub fn dense() -> Self {
        FlowOptions {
            max_snapshots: usize::MAX,
            ..Default::default()
        }
    }

    pub fn with_solver(mut self, solver: ProxSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_reference(mut self, reference: Field) -> Self {
        self.reference = Some(reference);
        self
    }
}

/// A computed discrete trajectory `t ↦ u(t)` on the uniform grid `tₙ = n·step`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub times: Vec<f64>,
    /// `I_h(uⁿ)`, one per time node.
    pub energies: Vec<f64>,
    /// `‖uⁿ − uⁿ⁻¹‖/step` for `n = 1..=M`; entry `n−1` belongs to step `n`.
    pub velocities: Vec<f64>,
    /// Yosida runs: `I_λ(uⁿ)` per node. Empty for minimizing movements.
    pub envelopes: Vec<f64>,
    /// `‖Duⁿ‖_p` per node when the integrand has a coercivity bound.
    pub grad_lp: Vec<f64>,
    /// `‖uⁿ − reference‖` per node when a reference was supplied.
    pub dist_to_reference: Vec<f64>,
    /// `‖A⁰(u⁰)‖`.
    pub initial_slope: f64,
    /// Minimizing movements: min over steps of
    /// `I(uⁿ) − I(uⁿ⁺¹) − ‖uⁿ⁺¹ − uⁿ‖²/(2τ)`.
    pub min_descent_margin: f64,
    /// Snapshot `i` is the state at node `i·stride`.
    pub snapshots: Vec<Field>,
    pub stride: usize,
    pub final_state: Field,
    pub prox_iterations: usize,
    pub max_kkt_residual: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("times are never empty")
    }

    pub fn initial_state(&self) -> &Field {
        &self.snapshots[0]
    }

    /// The state at node `n`, if it was stored.
    pub fn state(&self, n: usize) -> Option<&Field> {
        if n == self.steps() {
            return Some(&self.final_state);
        }
        if n.is_multiple_of(self.stride) {
            self.snapshots.get(n / self.stride)
        } else {
            None
        }
    }

    /// Stored `(node, state)` pairs including the final state.
    pub fn stored_states(&self) -> Vec<(usize, &Field)> {
        let mut out: Vec<(usize, &Field)> =
            self.snapshots.iter().enumerate().map(|(i, f)| (i * self.stride, f)).collect();
        if out.last().map(|(n, _)| *n) != Some(self.steps()) {
            out.push((self.steps(), &self.final_state));
        }
        out
    }

    /// Columns `n,t,energy,velocity_norm,dist_to_minimizer`; absent values
    /// are left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,t,energy,velocity_norm,dist_to_minimizer\n");
        for n in 0..self.times.len() {
            let vel = if n == 0 { String::new() } else { format!("{:e}", self.velocities[n - 1]) };
            let dist = self.dist_to_reference.get(n).map(|d| format!("{d:e}")).unwrap_or_default();
            writeln!(s, "{n},{:e},{:e},{vel},{dist}", self.times[n], self.energies[n]).unwrap();
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), FlowError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(FlowError::BadParameter { name, value })
    }
}

fn step_count(horizon: f64, step: f64) -> Result<usize, FlowError> {
    check_positive("T", horizon)?;
    if horizon < step * (1.0 - 1e-12) {
        return Err(FlowError::ShortHorizon { horizon, step });
    }
    Ok(((horizon / step) - 1e-9).ceil().max(1.0) as usize)
}

/// Per-node bookkeeping shared by both schemes.
struct Recorder {
    traj: Trajectory,
    p: Option<f64>,
    reference: Option<Field>,
}

impl Recorder {
    fn new(f: &DiscreteFunctional, u0: &Field, scheme: Scheme, steps: usize, opts: &FlowOptions) -> Self {
        let stride = steps.div_ceil(opts.max_snapshots.max(2) - 1).max(1);
        let p = f.coercivity().map(|c| c.p);
        let traj = Trajectory {
            scheme,
            times: Vec::with_capacity(steps + 1),
            energies: Vec::with_capacity(steps + 1),
            velocities: Vec::with_capacity(steps),
            envelopes: Vec::new(),
            grad_lp: Vec::new(),
            dist_to_reference: Vec::new(),
            initial_slope: minimal_section(f, u0).norm(),
            min_descent_margin: f64::INFINITY,
            snapshots: Vec::new(),
            stride,
            final_state: u0.clone(),
            prox_iterations: 0,
            max_kkt_residual: 0.0,
        };
        Recorder {
            traj,
            p,
            reference: opts.reference.clone(),
        }
    }

    fn node(&mut self, n: usize, u: &Field, energy: f64) {
        let t = &mut self.traj;
        t.times.push(n as f64 * t.scheme.step());
        t.energies.push(energy);
        if let Some(p) = self.p {
            t.grad_lp.push(lp_grad(u, p));
        }
        if let Some(r) = &self.reference {
            t.dist_to_reference.push(u.sub(r).norm());
        }
        if n.is_multiple_of(t.stride) {
            t.snapshots.push(u.clone());
        }
    }

    fn finish(mut self, u: Field) -> Trajectory {
        self.traj.final_state = u;
        self.traj
    }
}

fn ensure_convex(f: &DiscreteFunctional, u0: &Field) -> Result<(), FlowError> {
    if !f.is_convex() {
        return Err(FlowError::NonConvex(f.label().to_string()));
    }
    if !std::sync::Arc::ptr_eq(f.mesh(), u0.mesh()) && **f.mesh() != **u0.mesh() {
        return Err(FlowError::MeshMismatch);
    }
    Ok(())
}

/// Implicit Euler: `uⁿ⁺¹ = J_τ(uⁿ)` for `n = 0..⌈T/τ⌉`.
pub fn minimizing_movements(f: &DiscreteFunctional, u0: &Field, tau: f64, horizon: f64) -> Result<Trajectory, FlowError> {
    minimizing_movements_with(f, u0, tau, horizon, &FlowOptions::default())
}

pub fn minimizing_movements_with(
    f: &DiscreteFunctional,
    u0: &Field,
    tau: f64,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<Trajectory, FlowError> {
    ensure_convex(f, u0)?;
    check_positive("tau", tau)?;
    let steps = step_count(horizon, tau)?;
    let mut rec = Recorder::new(f, u0, Scheme::MinimizingMovements { tau }, steps, opts);
    let mut u = u0.clone();
    let mut energy = f.energy(&u);
    rec.node(0, &u, energy);
    for n in 1..=steps {
        let r = opts.solver.solve(f, &u, tau)?;
        let step = r.j.sub(&u);
        let step_sq = step.norm_sq();
        let t = &mut rec.traj;
        t.velocities.push(step_sq.sqrt() / tau);
        t.min_descent_margin = t.min_descent_margin.min(energy - r.energy_at_j - 0.5 * step_sq / tau);
        t.prox_iterations += r.iterations;
        t.max_kkt_residual = t.max_kkt_residual.max(r.kkt_residual);
        u = r.j;
        energy = r.energy_at_j;
        rec.node(n, &u, energy);
    }
    Ok(rec.finish(u))
}

/// RK4 for `u′ = −A_λ(u)`; every stage evaluates a resolvent. Requires
/// `dt ≤ λ/4`.
pub fn yosida_flow(
    f: &DiscreteFunctional,
    u0: &Field,
    lambda: f64,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory, FlowError> {
    yosida_flow_with(f, u0, lambda, dt, horizon, &FlowOptions::default())
}

pub fn yosida_flow_with(
    f: &DiscreteFunctional,
    u0: &Field,
    lambda: f64,
    dt: f64,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<Trajectory, FlowError> {
    ensure_convex(f, u0)?;
    check_positive("lambda", lambda)?;
    check_positive("dt", dt)?;
    if dt > lambda / 4.0 * (1.0 + 1e-12) {
        return Err(FlowError::UnstableStep { dt, limit: lambda / 4.0 });
    }
    let steps = step_count(horizon, dt)?;
    let mut rec = Recorder::new(f, u0, Scheme::Yosida { lambda, dt }, steps, opts);
    let solver = &opts.solver;
    let mut u = u0.clone();
    let mut guess = u0.clone();
    let stage = |rec: &mut Recorder, w: &Field, guess: &mut Field| -> Result<(Field, f64), FlowError> {
        let r = solver.solve_from(f, w, lambda, guess)?;
        rec.traj.prox_iterations += r.iterations;
        rec.traj.max_kkt_residual = rec.traj.max_kkt_residual.max(r.kkt_residual);
        *guess = r.j;
        Ok((r.a, r.envelope))
    };

    let (mut k1, mut envelope) = stage(&mut rec, &u, &mut guess)?;
    rec.node(0, &u, f.energy(&u));
    rec.traj.envelopes.push(envelope);
    for n in 1..=steps {
        let (k2, _) = stage(&mut rec, &u.axpy(-0.5 * dt, &k1), &mut guess)?;
        let (k3, _) = stage(&mut rec, &u.axpy(-0.5 * dt, &k2), &mut guess)?;
        let (k4, _) = stage(&mut rec, &u.axpy(-dt, &k3), &mut guess)?;
        let incr = k1.add(&k2.add(&k3).scale(2.0)).add(&k4);
        let next = u.axpy(-dt / 6.0, &incr);
        rec.traj.velocities.push(next.sub(&u).norm() / dt);
        u = next;
        (k1, envelope) = stage(&mut rec, &u, &mut guess)?;
        rec.node(n, &u, f.energy(&u));
        rec.traj.envelopes.push(envelope);
    }
    Ok(rec.finish(u))
}

/// One run of a diagnostic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSpec {
    pub scheme: Scheme,
    pub horizon: f64,
}

impl RunSpec {
    pub fn mm(tau: f64, horizon: f64) -> Self {
        RunSpec {
            scheme: Scheme::MinimizingMovements { tau },
            horizon,
        }
    }

    pub fn yosida(lambda: f64, dt: f64, horizon: f64) -> Self {
        RunSpec {
            scheme: Scheme::Yosida { lambda, dt },
            horizon,
        }
    }
}

pub fn run(f: &DiscreteFunctional, u0: &Field, spec: &RunSpec, opts: &FlowOptions) -> Result<Trajectory, FlowError> {
    match spec.scheme {
        Scheme::MinimizingMovements { tau } => minimizing_movements_with(f, u0, tau, spec.horizon, opts),
        Scheme::Yosida { lambda, dt } => yosida_flow_with(f, u0, lambda, dt, spec.horizon, opts),
    }
}

/// `ΔE + step·‖velocity‖²` per step, with `E = I` for minimizing movements
/// and `E = I_λ` for the Yosida flow (whose exact dissipation law it obeys).
pub fn balance_residuals(traj: &Trajectory) -> Vec<f64> {
    let e = if traj.envelopes.is_empty() { &traj.energies } else { &traj.envelopes };
    let step = traj.scheme.step();
    traj.velocities
        .iter()
        .enumerate()
        .map(|(i, v)| e[i + 1] - e[i] + step * v * v)
        .collect()
}

/// `Σ step·tₙ‖velₙ‖² + T·E(u_M) − Σ_{n<M} step·E(uⁿ)`, the discrete form of
/// `∫₀ᵀ t‖u′‖² dt + T·I(u(T)) = ∫₀ᵀ I(u) dt`.
pub fn weighted_identity_residual(traj: &Trajectory) -> f64 {
    let e = if traj.envelopes.is_empty() { &traj.energies } else { &traj.envelopes };
    let step = traj.scheme.step();
    let m = traj.steps();
    let dissipation: f64 = traj.velocities.iter().enumerate().map(|(i, v)| step * traj.times[i + 1] * v * v).sum();
    let integral: f64 = e[..m].iter().map(|x| step * x).sum();
    dissipation + traj.times[m] * e[m] - integral
}

const STEP_TOL: f64 = 1e-8;

/// Per-run checks on a single trajectory: energy monotonicity, the velocity
/// bound, the prox descent inequality and the `W^{1,p}` bound.
pub fn trajectory_checks(f: &DiscreteFunctional, traj: &Trajectory) -> DiagnosticsReport {
    let mut r = DiagnosticsReport::new();
    let ctx = traj.scheme.label();
    let monotone = traj.energies.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    r.push("flow.energy_monotone", monotone, STEP_TOL, ctx.clone());
    let vmax = traj.velocities.iter().copied().fold(0.0, f64::max);
    r.push("flow.velocity_bound", traj.initial_slope - vmax, STEP_TOL, ctx.clone());
    if let Scheme::MinimizingMovements { .. } = traj.scheme {
        r.push("flow.descent_identity", traj.min_descent_margin, STEP_TOL, ctx.clone());
    }
    if let (Some(c), false) = (f.coercivity(), traj.grad_lp.len() < 2) {
        // sup over t ≥ δ = first step
        let bound = ((traj.energies[1] + c.l) / c.nu).powf(1.0 / c.p);
        let sup = traj.grad_lp[1..].iter().copied().fold(0.0, f64::max);
        r.push("flow.lp_bound", bound - sup, STEP_TOL * (1.0 + bound), ctx);
    }
    r
}

/// Margins for contraction, energy–dissipation balance, the cross-parameter
/// Cauchy bound `‖u_λ(T) − u_μ(T)‖² ≤ 8(λ+μ)T‖A⁰(u₀)‖²`, the weighted
/// identity and scheme consistency, over the runs in `schedule`.
///
/// Each run is computed from both `u0` and `v0`; the contraction margin is
/// `‖uⁿ⁻¹ − vⁿ⁻¹‖ − ‖uⁿ − vⁿ‖` minimized over steps.
///
/// The balance constant `C` is the largest `max_n |rₙ|/step²` seen over the
/// runs of a scheme; it is reported, and the run with the finest step must
/// not have a ratio above twice that of the coarsest (a residual of first
/// order would grow by `2^k` over `k` halvings).
pub fn semigroup_diagnostics(
    f: &DiscreteFunctional,
    u0: &Field,
    v0: &Field,
    schedule: &[RunSpec],
    opts: &FlowOptions,
) -> Result<DiagnosticsReport, FlowError> {
    let dense = FlowOptions {
        max_snapshots: usize::MAX,
        reference: None,
        ..opts.clone()
    };
    let a0_sq = minimal_section(f, u0).norm_sq();
    let mut report = DiagnosticsReport::new();
    report.constant("a0_norm_sq", a0_sq);

    let mut runs: Vec<(RunSpec, Trajectory)> = Vec::new();
    for spec in schedule {
        let tu = run(f, u0, spec, &dense)?;
        let tv = run(f, v0, spec, &dense)?;
        let ctx = spec.scheme.label();
        let mut worst = f64::INFINITY;
        let mut prev = u0.sub(v0).norm();
        for n in 1..=tu.steps() {
            let d = tu.state(n).unwrap().sub(tv.state(n).unwrap()).norm();
            worst = worst.min(prev - d);
            prev = d;
        }
        report.push("flow.contraction", worst, STEP_TOL, ctx);
        report.merge(trajectory_checks(f, &tu));
        runs.push((*spec, tu));
    }

    for tag in ["mm", "yosida"] {
        let mut ratios: Vec<(f64, f64, f64)> = runs
            .iter()
            .filter(|(s, _)| s.scheme.tag() == tag)
            .map(|(s, t)| {
                let step = s.scheme.step();
                let rmax = balance_residuals(t).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                (step, rmax, rmax / (step * step))
            })
            .collect();
        if ratios.is_empty() {
            continue;
        }
        ratios.sort_by(|a, b| b.0.total_cmp(&a.0));
        let c = ratios.iter().map(|x| x.2).fold(0.0, f64::max);
        report.constant(format!("energy_balance_C.{tag}"), c);
        for (step, rmax, _) in &ratios {
            report.push("flow.energy_balance", c * step * step - rmax, STEP_TOL, format!("{tag} step={step}"));
        }
        if ratios.len() > 1 {
            let (coarse, fine) = (ratios[0], ratios[ratios.len() - 1]);
            report.push(
                "flow.energy_balance_order",
                2.0 * coarse.2 - fine.2,
                0.0,
                format!("{tag} ratio {:.4e} at step {} vs {:.4e} at step {}", coarse.2, coarse.0, fine.2, fine.0),
            );
        }
    }

    for (i, (si, ti)) in runs.iter().enumerate() {
        for (sj, tj) in runs.iter().skip(i + 1) {
            if (si.horizon - sj.horizon).abs() > 1e-12 || ti.steps() == 0 {
                continue;
            }
            let (id, pi, pj) = match (si.scheme, sj.scheme) {
                (Scheme::Yosida { lambda, .. }, Scheme::Yosida { lambda: mu, .. }) => ("flow.cauchy_yosida", lambda, mu),
                (Scheme::MinimizingMovements { tau }, Scheme::Yosida { lambda, .. })
                | (Scheme::Yosida { lambda, .. }, Scheme::MinimizingMovements { tau }) => ("flow.cauchy_schemes", lambda, tau),
                _ => continue,
            };
            let t_end = ti.horizon().min(tj.horizon());
            let d_sq = ti.final_state.sub(&tj.final_state).norm_sq();
            let bound = 8.0 * (pi + pj) * t_end * a0_sq;
            report.push(id, bound - d_sq, 0.0, format!("{} vs {}", si.scheme.label(), sj.scheme.label()));
        }
    }

    let mut mm: Vec<(f64, f64, f64)> = runs
        .iter()
        .filter_map(|(s, t)| match s.scheme {
            Scheme::MinimizingMovements { tau } => Some((s.horizon, tau, weighted_identity_residual(t))),
            _ => None,
        })
        .collect();
    mm.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    for w in mm.windows(2) {
        let ((h1, t1, r1), (h2, t2, r2)) = (w[0], w[1]);
        if (h1 - h2).abs() > 1e-12 || ((t1 / t2) - 2.0).abs() > 1e-9 {
            continue;
        }
        let order = (r1.abs() / r2.abs()).log2();
        let ctx = format!("tau {t1} -> {t2}: residual {r1:.4e} -> {r2:.4e}");
        report.push("flow.weighted_identity_decrease", r1.abs() - r2.abs(), 0.0, ctx.clone());
        report.push("flow.weighted_identity_order", order - 1.0, 0.0, ctx);
    }

    // scheme consistency on runs with τ = λ
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (si, ti) in &runs {
        let Scheme::MinimizingMovements { tau } = si.scheme else { continue };
        for (sj, tj) in &runs {
            if let Scheme::Yosida { lambda, .. } = sj.scheme {
                if (lambda - tau).abs() <= 1e-12 * tau && (si.horizon - sj.horizon).abs() <= 1e-12 {
                    pairs.push((tau, ti.final_state.sub(&tj.final_state).norm()));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    for w in pairs.windows(2) {
        let ((s1, d1), (s2, d2)) = (w[0], w[1]);
        let order = (d1 / d2).ln() / (s1 / s2).ln();
        report.push(
            "flow.scheme_consistency_order",
            order - 0.5,
            0.0,
            format!("param {s1} -> {s2}: distance {d1:.4e} -> {d2:.4e}"),
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalSlack {
    pub slack: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// RHS − LHS of the variational inequality at the final time, for a test
/// path `v` sampled on the trajectory's time grid.
///
/// Time integrals use the left-endpoint rule and `∂ₜv` the forward
/// difference, so `v = u` gives slack exactly 0.
pub fn variational_inequality_check(
    f: &DiscreteFunctional,
    traj: &Trajectory,
    v: &[Field],
) -> Result<VariationalSlack, FlowError> {
    if traj.stride != 1 {
        return Err(FlowError::Thinned(traj.stride));
    }
    let nodes = traj.times.len();
    if v.len() != nodes {
        return Err(FlowError::GridMismatch { expected: nodes, got: v.len() });
    }
    if v.iter().any(|x| !x.same_mesh(&traj.final_state)) {
        return Err(FlowError::MeshMismatch);
    }
    let m = nodes - 1;
    let dt = traj.scheme.step();
    let u = |n: usize| traj.state(n).expect("dense trajectory");
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for n in 0..m {
        lhs += dt * traj.energies[n];
        let dv = v[n + 1].sub(&v[n]);
        rhs += dt * f.energy(&v[n]) + dv.dot(&v[n].sub(u(n)));
    }
    rhs += 0.5 * v[0].sub(u(0)).norm_sq() - 0.5 * v[m].sub(u(m)).norm_sq();
    Ok(VariationalSlack { slack: rhs - lhs, lhs, rhs })
}

/// Minimizes `I_h` by steepest descent in the L² metric with Armijo
/// backtracking; the trial step doubles after every accepted step.
pub fn direct_minimizer(f: &DiscreteFunctional, start: &Field, tol: f64, max_iter: usize) -> Result<Field, FlowError> {
    let mut u = start.clone();
    let (mut e, mut g) = f.energy_and_gradient(&u);
    let mut step = 1.0;
    for _ in 0..max_iter {
        let g_sq = g.norm_sq();
        if g_sq.sqrt() <= tol {
            return Ok(u);
        }
        loop {
            let cand = u.axpy(-step, &g);
            let (ec, gc) = f.energy_and_gradient(&cand);
            if ec <= e - 0.5 * step * g_sq {
                u = cand;
                e = ec;
                g = gc;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(FlowError::MinimizerStalled {
                    iterations: max_iter,
                    residual: g_sq.sqrt(),
                });
            }
        }
    }
    Err(FlowError::MinimizerStalled {
        iterations: max_iter,
        residual: g.norm(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub minimizer_energy: f64,
    /// `(tₙ, ‖u(tₙ) − u*‖)` over the stored states.
    pub distances: Vec<(f64, f64)>,
    /// `I(u(tₙ)) − I(u*)` at every node.
    pub energy_gaps: Vec<f64>,
    pub final_distance: f64,
    pub final_energy_gap: f64,
    pub report: DiagnosticsReport,
}

/// Compares a trajectory with an independently computed minimizer `u*`
/// (descent from `u(0)` to gradient norm `1e−9`).
pub fn asymptotic_report(f: &DiscreteFunctional, traj: &Trajectory) -> Result<AsymptoticReport, FlowError> {
    let u_star = direct_minimizer(f, traj.initial_state(), 1e-9, 1_000_000)?;
    Ok(asymptotic_report_against(f, traj, &u_star))
}

pub fn asymptotic_report_against(f: &DiscreteFunctional, traj: &Trajectory, u_star: &Field) -> AsymptoticReport {
    let e_star = f.energy(u_star);
    let distances: Vec<(f64, f64)> =
        traj.stored_states().into_iter().map(|(n, u)| (traj.times[n], u.sub(u_star).norm())).collect();
    let energy_gaps: Vec<f64> = traj.energies.iter().map(|e| e - e_star).collect();
    let mut report = DiagnosticsReport::new();
    let ctx = traj.scheme.label();
    let worst = |xs: &mut dyn Iterator<Item = f64>| xs.fold(f64::INFINITY, f64::min);
    report.push(
        "asymptotic.distance_monotone",
        worst(&mut distances.windows(2).map(|w| w[0].1 - w[1].1)).min(0.0),
        STEP_TOL,
        ctx.clone(),
    );
    report.push(
        "asymptotic.energy_gap_nonnegative",
        worst(&mut energy_gaps.iter().copied()),
        STEP_TOL,
        ctx.clone(),
    );
    report.push(
        "asymptotic.energy_gap_monotone",
        worst(&mut energy_gaps.windows(2).map(|w| w[0] - w[1])).min(0.0),
        STEP_TOL,
        ctx,
    );
    report.constant("minimizer_energy", e_star);
    AsymptoticReport {
        minimizer_energy: e_star,
        final_distance: distances.last().map(|d| d.1).unwrap_or(0.0),
        final_energy_gap: *energy_gaps.last().unwrap_or(&0.0),
        distances,
        energy_gaps,
        report,
    }
}
