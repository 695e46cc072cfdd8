use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gradflow_cli::config::{apply_overrides, read_config, validate};
use gradflow_cli::{run_experiment, summary_lines, Kind};
use serde_json::Map;

#[derive(Parser)]
#[command(name = "gradflow", version, about = "Gradient-flow and integral-convexity experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run a gradient flow (minimizing movements or Yosida) and check its estimates.
    Flow(Args),
    /// Check the resolvent/Yosida/envelope properties on random pairs.
    Prox(Args),
    /// Search for laminate counterexamples and sample convexity of g.
    Analyze(Args),
    /// Build the two-scale laminate and report its gradient histogram.
    Laminate(Args),
    /// Check the matrix identities on seeded samples.
    Identities(Args),
    /// Estimate the rank-one gap of the Serre integrand.
    Serre(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Config file, key=value lines or a JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out/<kind>].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra key=value settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let (kind, args) = match cli.verb {
        Verb::Flow(a) => (Kind::Flow, a),
        Verb::Prox(a) => (Kind::ProxSuite, a),
        Verb::Analyze(a) => (Kind::AnalyzeG, a),
        Verb::Laminate(a) => (Kind::Laminate, a),
        Verb::Identities(a) => (Kind::Identities, a),
        Verb::Serre(a) => (Kind::Serre, a),
    };
    let mut map = match &args.config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    let mut sets = BTreeMap::new();
    for s in &args.sets {
        let Some((k, v)) = s.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{s}`");
        };
        sets.insert(k.trim().to_string(), v.trim().to_string());
    }
    apply_overrides(&mut map, Some(kind), args.seed, args.out.as_deref(), &sets)?;
    let spec = validate(map).context("invalid experiment spec")?;
    let out = spec.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));

    let outcome = run_experiment(&spec, &out)?;
    for line in summary_lines(&outcome.report) {
        println!("{line}");
    }
    for (name, v) in &outcome.report.constants {
        println!("const {name}={v:e}");
    }
    println!("artifacts written to {}", out.display());
    if let Some(c) = outcome.report.first_failure() {
        eprintln!("first failing check: {} (margin {:e}, tolerance {:e})", c.id, c.margin, c.tolerance);
        return Ok(false);
    }
    Ok(true)
}
