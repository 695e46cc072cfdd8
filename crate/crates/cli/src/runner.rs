//! Runs a validated [`ExperimentSpec`] and writes its artifacts.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gradflow::analyzer::{
    build_double_laminate, convexity_sampler, counterexample_search, identity_suite, null_lagrangian_term,
    quartic_norm, quasimonotonicity_margin, AnalyzerError, SearchOutcome, SIGN_TOLERANCE, TARGETS,
};
use gradflow::convex_core::{lambda_ladder_checks, resolvent_suite, ProxError, ProxSolver};
use gradflow::flow::{asymptotic_report_against, run, trajectory_checks, FlowError, FlowOptions, RunSpec};
use gradflow::integrands::{serre_rank_one_gap, IntegrandError};
use gradflow::mat2::Mat2;
use gradflow::mesh::{build_mesh, random_field, MeshError};
use gradflow::{DiagnosticsReport, DiscreteFunctional, Field, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{AnalyzeSpec, Experiment, ExperimentSpec, FlowSpec, Initial, LaminateRun, MeshSpec, ProxSpec};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
}

/// The merged diagnostics of a run and the files it wrote, in write order.
#[derive(Debug)]
pub struct Outcome {
    pub report: DiagnosticsReport,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass()
    }
}

/// Strict inequalities are checked as `margin ≥ 1e−12`.
const STRICT: f64 = -1e-12;

/// Lambda ladder used by the proximal suite.
pub const LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Sink, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| RunError::Write {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let mut body = serde_json::to_string_pretty(value).expect("artifact types serialize");
        body.push('\n');
        self.text(name, &body)
    }
}

/// Runs the experiment, writing artifacts under `out`.
///
/// Every run writes `spec.json` and `report.json`; the rest depends on the
/// experiment kind.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<Outcome, RunError> {
    let mut sink = Sink::new(out)?;
    sink.json("spec.json", spec)?;
    let report = match &spec.experiment {
        Experiment::Flow(f) => run_flow(f, spec.seed, &mut sink)?,
        Experiment::ProxSuite(p) => run_prox(p, spec.seed)?,
        Experiment::AnalyzeG(a) => run_analyze(a, spec.seed, &mut sink)?,
        Experiment::Laminate(l) => run_laminate(l, &mut sink)?,
        Experiment::Identities { count } => identity_suite(spec.seed, *count),
        Experiment::Serre { grid, doubling } => run_serre(*grid, *doubling, &mut sink)?,
    };
    sink.json("report.json", &report)?;
    Ok(Outcome {
        report,
        artifacts: sink.written,
    })
}

/// One line per check: verdict, id, margin, tolerance and context.
pub fn summary_lines(report: &DiagnosticsReport) -> Vec<String> {
    report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {} margin={:.6e} tol={:.1e} {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.margin,
                c.tolerance,
                c.context
            )
        })
        .collect()
}

fn mesh_of(spec: &MeshSpec) -> Result<Arc<Mesh>, RunError> {
    Ok(build_mesh(spec.dim, spec.components, spec.m)?)
}

/// `amplitude·(sin πx sin πy, sin 2πx sin πy)` in 2-D, `amplitude·sin πx` in 1-D.
pub fn smooth_initial(mesh: &Arc<Mesh>, amplitude: f64) -> Field {
    Field::from_fn(mesh, |x| {
        let sy = if mesh.dim() == 2 { (PI * x[1]).sin() } else { 1.0 };
        [
            amplitude * (PI * x[0]).sin() * sy,
            amplitude * (2.0 * PI * x[0]).sin() * sy,
        ]
    })
}

fn run_flow(spec: &FlowSpec, seed: u64, sink: &mut Sink) -> Result<DiagnosticsReport, RunError> {
    let mesh = mesh_of(&spec.mesh)?;
    let f = DiscreteFunctional::new(&mesh, spec.integrand.clone())?;
    let u0 = match spec.initial {
        Initial::Smooth => smooth_initial(&mesh, spec.amplitude),
        Initial::Random => random_field(&mesh, seed, spec.amplitude),
    };
    // every shipped integrand satisfies f ≥ 0 = f(0), so zero is the minimizer
    let u_star = Field::zeros(&mesh);
    let opts = FlowOptions {
        solver: ProxSolver::with_tol(spec.tol),
        max_snapshots: spec.snapshots,
        reference: Some(u_star.clone()),
    };
    let run_spec = RunSpec {
        scheme: spec.scheme,
        horizon: spec.horizon,
    };
    let traj = run(&f, &u0, &run_spec, &opts)?;
    let mut report = trajectory_checks(&f, &traj);
    report.merge(asymptotic_report_against(&f, &traj, &u_star).report);
    report.constant("steps", traj.steps() as f64);
    report.constant("prox_iterations", traj.prox_iterations as f64);
    report.constant("max_kkt_residual", traj.max_kkt_residual);
    report.constant("initial_slope", traj.initial_slope);
    sink.text("trajectory.csv", &traj.to_csv())?;
    sink.text("initial.csv", &u0.to_csv())?;
    sink.text("final.csv", &traj.final_state.to_csv())?;
    Ok(report)
}

fn run_prox(spec: &ProxSpec, seed: u64) -> Result<DiagnosticsReport, RunError> {
    let mesh = mesh_of(&spec.mesh)?;
    let solver = ProxSolver::with_tol(spec.tol);
    let mut report = DiagnosticsReport::new();
    for ig in &spec.integrands {
        let f = DiscreteFunctional::new(&mesh, ig.clone())?;
        let mut part = resolvent_suite(&f, &spec.suite, &solver)?;
        let w = random_field(&mesh, seed, spec.suite.amplitude);
        // resolvent errors reach A_λ amplified by 1/λ, so the ladder solves tighter
        let tight = ProxSolver::with_tol(spec.tol.min(1e-11));
        let mut ladder = lambda_ladder_checks(&f, &w, &LADDER, &tight, spec.suite.tolerance)?;
        for c in &mut ladder.checks {
            c.context = format!("{} {}", f.label(), c.context);
        }
        part.merge(ladder);
        report.checks.extend(part.checks);
        for (name, v) in part.constants {
            report.constant(format!("{}.{name}", f.label()), v);
        }
    }
    report.checks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(report)
}

fn uniform_mat(rng: &mut ChaCha8Rng, r: f64) -> Mat2 {
    Mat2::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

fn run_analyze(spec: &AnalyzeSpec, seed: u64, sink: &mut Sink) -> Result<DiagnosticsReport, RunError> {
    let k = spec.k;
    let mut report = DiagnosticsReport::new();
    let convex = (-2.0..=4.0).contains(&k);
    let ctx = format!("k={k}");

    let mesh = build_mesh(2, 2, spec.m)?;
    let outcome = counterexample_search(k, &mesh, &spec.laminate)?;
    sink.json("certificate.json", &outcome)?;
    match &outcome {
        SearchOutcome::Certificate(c) => {
            sink.text("psi.csv", &c.psi.to_csv())?;
            sink.text("phi.csv", &c.phi.to_csv())?;
            let q = c.q_per_area;
            report.constant("q_per_area", q);
            report.constant("pure_value", c.pure_value);
            report.constant("target_fraction", c.histogram.fraction);
            if convex {
                report.push("analyze.none_found", q, SIGN_TOLERANCE, format!("{ctx} {:?} certificate", c.recipe));
            } else {
                report.push("analyze.certificate", 0.5 * c.pure_value - q, 0.0, format!("{ctx} {:?}", c.recipe));
            }
            report.push(
                "analyze.certificate_recompute",
                -(c.recompute() - c.q).abs(),
                1e-12 * c.q.abs(),
                ctx.clone(),
            );
            if spec.refine {
                let fine_mesh = build_mesh(2, 2, 2 * spec.m)?;
                let fine = counterexample_search(k, &fine_mesh, &spec.laminate.refined())?;
                sink.json("certificate_refined.json", &fine)?;
                let qf = fine.certificate().map(|f| f.q_per_area).unwrap_or(f64::NAN);
                report.constant("q_per_area_refined", qf);
                report.push(
                    "analyze.refinement_improves",
                    (q - c.pure_value).abs() - (qf - c.pure_value).abs(),
                    STRICT,
                    format!("{ctx} coarse={q:.6} refined={qf:.6} pure={}", c.pure_value),
                );
            }
        }
        SearchOutcome::NoneFound { values } => {
            let worst = values.iter().map(|v| v.q_per_area / v.scale).fold(f64::INFINITY, f64::min);
            if convex {
                report.push("analyze.none_found", worst, SIGN_TOLERANCE, ctx.clone());
            } else {
                report.push("analyze.certificate", f64::NEG_INFINITY, 0.0, format!("{ctx} no certificate"));
            }
        }
    }

    let sampler = convexity_sampler(k, spec.samples, seed);
    sink.json("sampler.json", &sampler)?;
    report.constant("sampler_min", sampler.min);
    if convex {
        report.push("analyze.sampler_nonnegative", sampler.min, 1e-9, format!("{ctx} samples={}", spec.samples));
    } else {
        report.push("analyze.sampler_indefinite", -sampler.min, STRICT, format!("{ctx} samples={}", spec.samples));
    }

    if (0.0..=8.0).contains(&k) {
        let probe = build_mesh(2, 2, spec.probe_m)?;
        let ig = gradflow::Integrand::g(k);
        let amp = 1.0 / spec.probe_m as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut qm_worst, mut nl_worst) = ((f64::INFINITY, String::new()), (f64::INFINITY, String::new()));
        for i in 0..spec.xi_count {
            let xi = uniform_mat(&mut rng, 1.0);
            for j in 0..spec.phi_count {
                let phi = random_field(&probe, rng.gen(), amp);
                let lhs = quasimonotonicity_margin(&ig, xi, &phi);
                let rhs = (8.0 - k) / 8.0 * quartic_norm(&phi);
                let m = (lhs - rhs) / (1.0 + lhs.abs() + rhs.abs());
                if m < qm_worst.0 {
                    qm_worst = (m, format!("{ctx} xi#{i} phi#{j}"));
                }
                let nl = null_lagrangian_term(xi, &phi);
                let scale = 1.0 + xi.det().abs() * phi.gradients().map(|e| e.det().abs()).sum::<f64>() * probe.cell_area();
                if -nl.abs() / scale < nl_worst.0 {
                    nl_worst = (-nl.abs() / scale, format!("{ctx} xi#{i} phi#{j}"));
                }
            }
        }
        report.push("analyze.quasimonotone", qm_worst.0, 1e-9, qm_worst.1);
        report.push("analyze.null_lagrangian", nl_worst.0, 1e-12, nl_worst.1);
    }
    Ok(report)
}

fn run_laminate(spec: &LaminateRun, sink: &mut Sink) -> Result<DiagnosticsReport, RunError> {
    let mesh = build_mesh(2, 2, spec.m)?;
    let lam = build_double_laminate(&mesh, &spec.laminate)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        resolution: usize,
        spec: &'a gradflow::analyzer::LaminateSpec,
        histogram: &'a gradflow::analyzer::TargetHistogram,
    }
    sink.json(
        "laminate.json",
        &Summary {
            resolution: spec.m,
            spec: &lam.spec,
            histogram: &lam.histogram,
        },
    )?;
    sink.text("u.csv", &lam.u.to_csv())?;

    // cells with every vertex in the cutoff core carry a target gradient exactly
    let rho = spec.laminate.rho;
    let co = mesh.coords();
    let inside = |v: usize| co[v].iter().all(|&t| t >= rho - 1e-12 && t <= 1.0 - rho + 1e-12);
    let mut worst: f64 = 0.0;
    let mut core_cells = 0usize;
    for c in 0..mesh.cell_count() {
        if mesh.cell_vertices(c).iter().all(|&v| inside(v)) {
            core_cells += 1;
            let xi = lam.u.cell_gradient(c);
            let d = TARGETS.iter().map(|t| (xi - *t).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    let mut report = DiagnosticsReport::new();
    report.push("laminate.core_on_targets", -worst, 1e-12, format!("m={} core_cells={core_cells}", spec.m));
    report.constant("target_fraction", lam.histogram.fraction);
    Ok(report)
}

fn run_serre(grid: usize, doubling: bool, sink: &mut Sink) -> Result<DiagnosticsReport, RunError> {
    let gap = serre_rank_one_gap(grid);
    let mut report = DiagnosticsReport::new();
    report.push("serre.positive", gap.epsilon, STRICT, format!("grid={grid}"));
    report.constant("epsilon", gap.epsilon);
    if doubling {
        let fine = serre_rank_one_gap(2 * grid);
        report.push(
            "serre.grid_stable",
            1e-3 - (gap.epsilon - fine.epsilon).abs(),
            0.0,
            format!("grid={grid} vs {}", 2 * grid),
        );
        report.constant("epsilon_refined", fine.epsilon);
        sink.json("serre.json", &[&gap, &fine])?;
    } else {
        sink.json("serre.json", &[&gap])?;
    }
    Ok(report)
}
