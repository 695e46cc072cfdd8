//! Experiment specifications: parsing and validation.
//!
//! A config file is either a JSON object or `key=value` lines (`#` starts a
//! comment). Both are mapped onto the same flat key set; unknown keys and
//! keys that do not apply to the chosen experiment are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gradflow::analyzer::LaminateSpec;
use gradflow::convex_core::SuiteConfig;
use gradflow::flow::Scheme;
use gradflow::Integrand;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("{0}")]
    Schema(String),
    #[error("key `{key}` does not apply to {kind} experiments")]
    NotApplicable { key: String, kind: &'static str },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

/// Every key any experiment understands.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub integrand: Option<String>,
    pub k: Option<f64>,
    pub p: Option<f64>,
    pub dim: Option<usize>,
    pub components: Option<usize>,
    pub m: Option<usize>,
    pub scheme: Option<String>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub initial: Option<String>,
    pub amplitude: Option<f64>,
    pub tol: Option<f64>,
    pub snapshots: Option<usize>,
    pub pairs: Option<usize>,
    pub fd_points: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub count: Option<usize>,
    pub samples: Option<usize>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub rho: Option<f64>,
    pub refine: Option<bool>,
    pub xi_count: Option<usize>,
    pub phi_count: Option<usize>,
    pub probe_m: Option<usize>,
    pub grid: Option<usize>,
    pub doubling: Option<bool>,
}

/// Keys accepted by every experiment.
const COMMON: &[&str] = &["kind", "seed", "out"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Flow,
    ProxSuite,
    AnalyzeG,
    Laminate,
    Identities,
    Serre,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Flow,
        Kind::ProxSuite,
        Kind::AnalyzeG,
        Kind::Laminate,
        Kind::Identities,
        Kind::Serre,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Flow => "flow",
            Kind::ProxSuite => "prox-suite",
            Kind::AnalyzeG => "analyze-g",
            Kind::Laminate => "laminate",
            Kind::Identities => "identities",
            Kind::Serre => "serre",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Kind::Flow => &[
                "integrand", "k", "p", "dim", "components", "m", "scheme", "tau", "lambda", "dt", "T", "initial",
                "amplitude", "tol", "snapshots",
            ],
            Kind::ProxSuite => &[
                "integrand", "k", "p", "dim", "components", "m", "amplitude", "tol", "pairs", "fd_points",
                "lambda_min", "lambda_max",
            ],
            Kind::AnalyzeG => &[
                "k", "m", "eps1", "eps2", "rho", "refine", "samples", "xi_count", "phi_count", "probe_m",
            ],
            Kind::Laminate => &["m", "eps1", "eps2", "rho"],
            Kind::Identities => &["count"],
            Kind::Serre => &["grid", "doubling"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// Low sine modes scaled by the amplitude.
    Smooth,
    /// Seeded uniform interior values in `[−amplitude, amplitude]`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSpec {
    pub dim: usize,
    pub components: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSpec {
    pub integrand: Integrand,
    pub mesh: MeshSpec,
    pub scheme: Scheme,
    pub horizon: f64,
    pub initial: Initial,
    pub amplitude: f64,
    pub tol: f64,
    pub snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxSpec {
    pub integrands: Vec<Integrand>,
    pub mesh: MeshSpec,
    pub suite: SuiteConfig,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeSpec {
    pub k: f64,
    pub m: usize,
    pub laminate: LaminateSpec,
    pub refine: bool,
    pub samples: usize,
    pub xi_count: usize,
    pub phi_count: usize,
    pub probe_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaminateRun {
    pub m: usize,
    pub laminate: LaminateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Flow(FlowSpec),
    ProxSuite(ProxSpec),
    AnalyzeG(AnalyzeSpec),
    Laminate(LaminateRun),
    Identities { count: usize },
    Serre { grid: usize, doubling: bool },
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::Flow(_) => Kind::Flow,
            Experiment::ProxSuite(_) => Kind::ProxSuite,
            Experiment::AnalyzeG(_) => Kind::AnalyzeG,
            Experiment::Laminate(_) => Kind::Laminate,
            Experiment::Identities { .. } => Kind::Identities,
            Experiment::Serre { .. } => Kind::Serre,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub seed: u64,
    /// `None` means the caller picks (the binary uses `out/<kind>`).
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

/// Reads a config file as JSON (if it starts with `{`) or `key=value` lines.
pub fn read_config(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_text(&text)
}

pub fn parse_text(text: &str) -> Result<Map<String, Value>, ConfigError> {
    if text.trim_start().starts_with('{') {
        return match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(map)) => Ok(map),
            Ok(_) => Err(ConfigError::Schema("JSON config must be an object".into())),
            Err(e) => Err(ConfigError::Schema(format!("malformed JSON: {e}"))),
        };
    }
    let mut map = Map::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        insert_pair(&mut map, key.trim(), value.trim())?;
    }
    Ok(map)
}

/// Adds `key=value` with the value typed as integer, float, bool or string.
pub fn insert_pair(map: &mut Map<String, Value>, key: &str, value: &str) -> Result<(), ConfigError> {
    if map.contains_key(key) {
        return Err(ConfigError::Duplicate(key.to_string()));
    }
    map.insert(key.to_string(), scalar(value));
    Ok(())
}

fn scalar(s: &str) -> Value {
    if let Ok(i) = s.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(i) = s.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(x) = s.parse::<f64>() {
        if let Some(n) = serde_json::Number::from_f64(x) {
            return Value::Number(n);
        }
    }
    match s {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(s.to_string()),
    }
}

/// Parses and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentSpec, ConfigError> {
    validate(read_config(path.as_ref())?)
}

/// Validates a key map. Nothing is computed before this returns `Ok`.
pub fn validate(map: Map<String, Value>) -> Result<ExperimentSpec, ConfigError> {
    let keys: Vec<String> = map.keys().cloned().collect();
    let raw: RawConfig = serde_json::from_value(Value::Object(map)).map_err(|e| ConfigError::Schema(e.to_string()))?;
    let kind_name = raw.kind.as_deref().ok_or(ConfigError::Missing("kind"))?;
    let kind = Kind::parse(kind_name).ok_or_else(|| {
        let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
        invalid("kind", format!("`{kind_name}` is not one of {}", names.join(", ")))
    })?;
    if let Some(key) = keys.iter().find(|k| !COMMON.contains(&k.as_str()) && !kind.keys().contains(&k.as_str())) {
        return Err(ConfigError::NotApplicable {
            key: key.clone(),
            kind: kind.name(),
        });
    }
    let experiment = match kind {
        Kind::Flow => Experiment::Flow(flow_spec(&raw)?),
        Kind::ProxSuite => Experiment::ProxSuite(prox_spec(&raw)?),
        Kind::AnalyzeG => Experiment::AnalyzeG(analyze_spec(&raw)?),
        Kind::Laminate => {
            let m = raw.m.unwrap_or(1024);
            Experiment::Laminate(LaminateRun {
                m,
                laminate: laminate_spec(&raw, m)?,
            })
        }
        Kind::Identities => Experiment::Identities {
            count: positive_count("count", raw.count.unwrap_or(100_000))?,
        },
        Kind::Serre => Experiment::Serre {
            grid: positive_count("grid", raw.grid.unwrap_or(64))?,
            doubling: raw.doubling.unwrap_or(true),
        },
    };
    Ok(ExperimentSpec {
        seed: raw.seed.unwrap_or(0),
        out: raw.out,
        experiment,
    })
}

fn positive(key: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn positive_count(key: &'static str, v: usize) -> Result<usize, ConfigError> {
    if v == 0 {
        Err(invalid(key, "must be at least 1"))
    } else {
        Ok(v)
    }
}

fn integrand(raw: &RawConfig) -> Result<Integrand, ConfigError> {
    let name = raw.integrand.as_deref().ok_or(ConfigError::Missing("integrand"))?;
    match name {
        "g" => {
            if raw.p.is_some() {
                return Err(invalid("p", "only the p-Dirichlet integrand takes p"));
            }
            let k = raw.k.ok_or(ConfigError::Missing("k"))?;
            if !k.is_finite() {
                return Err(invalid("k", "must be finite"));
            }
            Ok(Integrand::g(k))
        }
        "p" | "p_dirichlet" => {
            if raw.k.is_some() {
                return Err(invalid("k", "only the g integrand takes k"));
            }
            let p = raw.p.ok_or(ConfigError::Missing("p"))?;
            Integrand::p_dirichlet(p).map_err(|e| invalid("p", e.to_string()))
        }
        other => Err(invalid("integrand", format!("`{other}` is not one of g, p_dirichlet"))),
    }
}

fn mesh_spec(raw: &RawConfig, ig: Option<&Integrand>) -> Result<MeshSpec, ConfigError> {
    let planar = matches!(ig, Some(Integrand::GDetSquared { .. }));
    let dim = raw.dim.unwrap_or(2);
    if !(dim == 1 || dim == 2) {
        return Err(invalid("dim", format!("must be 1 or 2, got {dim}")));
    }
    let components = raw.components.unwrap_or(if dim == 1 { 1 } else { 2 });
    if !(components == 1 || components == 2) {
        return Err(invalid("components", format!("must be 1 or 2, got {components}")));
    }
    if planar && (dim != 2 || components != 2) {
        return Err(invalid("dim", "the g integrand needs dim=2 and components=2"));
    }
    let m = raw.m.unwrap_or(if dim == 1 { 128 } else { 32 });
    if m < 2 {
        return Err(invalid("m", format!("need at least 2 cells per side, got {m}")));
    }
    Ok(MeshSpec { dim, components, m })
}

fn flow_spec(raw: &RawConfig) -> Result<FlowSpec, ConfigError> {
    let ig = integrand(raw)?;
    if !ig.is_convex() {
        return Err(invalid(
            "k",
            format!("flow requires convex integrand (−2≤k≤4); {} is not convex", ig.name()),
        ));
    }
    let mesh = mesh_spec(raw, Some(&ig))?;
    let scheme_name = match (raw.scheme.as_deref(), raw.tau, raw.lambda) {
        (Some(s), _, _) => s,
        (None, Some(_), None) => "mm",
        (None, None, Some(_)) => "yosida",
        (None, Some(_), Some(_)) => return Err(invalid("scheme", "both tau and lambda given; set scheme=mm or scheme=yosida")),
        (None, None, None) => "mm",
    };
    let scheme = match scheme_name {
        "mm" => {
            if raw.lambda.is_some() || raw.dt.is_some() {
                return Err(invalid("scheme", "minimizing movements takes tau only"));
            }
            let tau = positive("tau", raw.tau.unwrap_or(0.01))?;
            Scheme::MinimizingMovements { tau }
        }
        "yosida" => {
            if raw.tau.is_some() {
                return Err(invalid("scheme", "the Yosida flow takes lambda and dt, not tau"));
            }
            let lambda = positive("lambda", raw.lambda.unwrap_or(0.01))?;
            let dt = positive("dt", raw.dt.unwrap_or(0.125 * lambda))?;
            if dt > 0.25 * lambda * (1.0 + 1e-12) {
                return Err(invalid("dt", format!("dt={dt} exceeds lambda/4={}", 0.25 * lambda)));
            }
            Scheme::Yosida { lambda, dt }
        }
        other => return Err(invalid("scheme", format!("`{other}` is not one of mm, yosida"))),
    };
    let horizon = positive("T", raw.horizon.unwrap_or(2.0))?;
    if horizon < scheme.step() {
        return Err(invalid("T", format!("T={horizon} is shorter than the step {}", scheme.step())));
    }
    let initial = match raw.initial.as_deref().unwrap_or("smooth") {
        "smooth" => Initial::Smooth,
        "random" => Initial::Random,
        other => return Err(invalid("initial", format!("`{other}` is not one of smooth, random"))),
    };
    Ok(FlowSpec {
        integrand: ig,
        mesh,
        scheme,
        horizon,
        initial,
        amplitude: positive("amplitude", raw.amplitude.unwrap_or(0.1))?,
        tol: positive("tol", raw.tol.unwrap_or(1e-9))?,
        snapshots: positive_count("snapshots", raw.snapshots.unwrap_or(200))?,
    })
}

fn prox_spec(raw: &RawConfig) -> Result<ProxSpec, ConfigError> {
    let integrands = if raw.integrand.is_some() {
        vec![integrand(raw)?]
    } else {
        if let Some(key) = [("k", raw.k.is_some()), ("p", raw.p.is_some())].iter().find(|(_, set)| *set) {
            return Err(invalid(key.0, "set `integrand` to choose a single integrand"));
        }
        vec![
            Integrand::g(0.0),
            Integrand::g(2.0),
            Integrand::g(4.0),
            Integrand::p_dirichlet(2.0).expect("p > 1"),
            Integrand::p_dirichlet(4.0).expect("p > 1"),
        ]
    };
    if let Some(bad) = integrands.iter().find(|ig| !ig.is_convex()) {
        return Err(invalid("k", format!("the proximal suite needs a convex integrand; {} is not", bad.name())));
    }
    let mesh = mesh_spec(raw, integrands.iter().find(|ig| matches!(ig, Integrand::GDetSquared { .. })))?;
    let defaults = SuiteConfig::default();
    let lambda_min = positive("lambda_min", raw.lambda_min.unwrap_or(defaults.lambda_min))?;
    let lambda_max = positive("lambda_max", raw.lambda_max.unwrap_or(defaults.lambda_max))?;
    if lambda_min > lambda_max {
        return Err(invalid("lambda_min", format!("{lambda_min} exceeds lambda_max={lambda_max}")));
    }
    let pairs = positive_count("pairs", raw.pairs.unwrap_or(defaults.pairs))?;
    let fd_points = raw.fd_points.unwrap_or(defaults.fd_points);
    if fd_points > pairs {
        return Err(invalid("fd_points", format!("{fd_points} exceeds pairs={pairs}")));
    }
    Ok(ProxSpec {
        integrands,
        mesh,
        suite: SuiteConfig {
            pairs,
            fd_points,
            amplitude: positive("amplitude", raw.amplitude.unwrap_or(defaults.amplitude))?,
            lambda_min,
            lambda_max,
            seed: raw.seed.unwrap_or(0),
            ..defaults
        },
        tol: positive("tol", raw.tol.unwrap_or(1e-9))?,
    })
}

fn laminate_spec(raw: &RawConfig, m: usize) -> Result<LaminateSpec, ConfigError> {
    let d = LaminateSpec::default();
    let spec = LaminateSpec {
        eps1: raw.eps1.unwrap_or(d.eps1),
        eps2: raw.eps2.unwrap_or(d.eps2),
        rho: raw.rho.unwrap_or(d.rho),
    };
    spec.validate(m).map_err(|e| {
        let msg = e.to_string();
        let key = ["eps1", "eps2", "rho"].into_iter().find(|k| msg.contains(&format!("{k}="))).unwrap_or("eps1");
        invalid(key, msg)
    })?;
    Ok(spec)
}

fn analyze_spec(raw: &RawConfig) -> Result<AnalyzeSpec, ConfigError> {
    let k = raw.k.ok_or(ConfigError::Missing("k"))?;
    if !k.is_finite() {
        return Err(invalid("k", "must be finite"));
    }
    let m = raw.m.unwrap_or(1024);
    Ok(AnalyzeSpec {
        k,
        m,
        laminate: laminate_spec(raw, m)?,
        refine: raw.refine.unwrap_or(true),
        samples: positive_count("samples", raw.samples.unwrap_or(1_000_000))?,
        xi_count: positive_count("xi_count", raw.xi_count.unwrap_or(20))?,
        phi_count: positive_count("phi_count", raw.phi_count.unwrap_or(100))?,
        probe_m: match raw.probe_m.unwrap_or(12) {
            m if m >= 2 => m,
            m => return Err(invalid("probe_m", format!("need at least 2 cells per side, got {m}"))),
        },
    })
}

/// Overrides for values given on the command line, applied before validation.
pub fn apply_overrides(
    map: &mut Map<String, Value>,
    kind: Option<Kind>,
    seed: Option<u64>,
    out: Option<&Path>,
    sets: &BTreeMap<String, String>,
) -> Result<(), ConfigError> {
    if let Some(kind) = kind {
        match map.get("kind") {
            Some(Value::String(s)) if s != kind.name() => {
                return Err(invalid("kind", format!("config says `{s}` but the command runs `{}`", kind.name())));
            }
            _ => {
                map.insert("kind".into(), Value::String(kind.name().into()));
            }
        }
    }
    for (k, v) in sets {
        map.insert(k.clone(), scalar(v));
    }
    if let Some(seed) = seed {
        map.insert("seed".into(), Value::from(seed));
    }
    if let Some(out) = out {
        map.insert("out".into(), Value::String(out.to_string_lossy().into_owned()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> Result<ExperimentSpec, ConfigError> {
        validate(parse_text(text)?)
    }

    #[test]
    fn flow_key_value() {
        let s = spec("kind=flow\nintegrand=g\nk=4\nm=32\ntau=0.01\nT=2\n").unwrap();
        match s.experiment {
            Experiment::Flow(f) => {
                assert_eq!(f.integrand, Integrand::g(4.0));
                assert_eq!(f.mesh.m, 32);
                assert_eq!(f.scheme, Scheme::MinimizingMovements { tau: 0.01 });
                assert_eq!(f.horizon, 2.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_and_key_value_agree() {
        let a = spec("kind=flow\nintegrand=p\np=3\nlambda=0.01\nT=1 # comment\n").unwrap();
        let b = spec(r#"{"kind":"flow","integrand":"p","p":3,"lambda":0.01,"T":1}"#).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonconvex_flow_is_refused() {
        let e = spec("kind=flow\nintegrand=g\nk=8\ntau=0.01\nT=1").unwrap_err();
        assert!(e.to_string().contains("flow requires convex integrand (−2≤k≤4)"), "{e}");
    }

    #[test]
    fn zero_tau_is_refused() {
        let e = spec("kind=flow\nintegrand=g\nk=4\ntau=0\nT=1").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { key: "tau", .. }), "{e}");
    }

    #[test]
    fn laminate_divisibility() {
        let e = spec("kind=laminate\nm=64\neps1=0.03").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { key: "eps1", .. }));
        assert!(e.to_string().contains("multiple of the cell size 1/64"), "{e}");
        let e = spec("kind=laminate\nm=256").unwrap_err();
        assert!(e.to_string().contains("even number"), "{e}");
    }

    #[test]
    fn misspelled_and_misplaced_keys() {
        let e = spec("kind=flow\nintegrand=g\nk=4\ntua=0.01\nT=1").unwrap_err();
        assert!(e.to_string().contains("tua"), "{e}");
        let e = spec("kind=identities\ngrid=4").unwrap_err();
        assert!(matches!(e, ConfigError::NotApplicable { ref key, .. } if key == "grid"), "{e}");
        let e = spec("kind=identities\ncount=1\ncount=2").unwrap_err();
        assert!(matches!(e, ConfigError::Duplicate(_)));
    }

    #[test]
    fn yosida_step_limit() {
        let e = spec("kind=flow\nintegrand=p\np=2\nlambda=0.01\ndt=0.01\nT=1").unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { key: "dt", .. }), "{e}");
        let s = spec("kind=flow\nintegrand=p\np=2\nlambda=0.01\nT=1").unwrap();
        let Experiment::Flow(f) = s.experiment else { panic!() };
        assert_eq!(f.scheme, Scheme::Yosida { lambda: 0.01, dt: 0.00125 });
    }

    #[test]
    fn flow_defaults() {
        let s = spec("kind=flow\nintegrand=p\np=2\ndim=1").unwrap();
        let Experiment::Flow(f) = s.experiment else { panic!() };
        assert_eq!(f.scheme, Scheme::MinimizingMovements { tau: 0.01 });
        assert_eq!((f.horizon, f.mesh.m, f.mesh.components), (2.0, 128, 1));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(parse_config("/nonexistent/x.cfg"), Err(ConfigError::Read { .. })));
    }

    #[test]
    fn overrides() {
        let mut map = parse_text("kind=identities\ncount=10").unwrap();
        let sets = BTreeMap::from([("count".to_string(), "20".to_string())]);
        apply_overrides(&mut map, Some(Kind::Identities), Some(3), None, &sets).unwrap();
        let s = validate(map).unwrap();
        assert_eq!(s.seed, 3);
        assert_eq!(s.experiment, Experiment::Identities { count: 20 });
        let mut map = parse_text("kind=serre").unwrap();
        assert!(apply_overrides(&mut map, Some(Kind::Flow), None, None, &BTreeMap::new()).is_err());
    }
}
