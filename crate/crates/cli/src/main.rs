mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::{Outcome, RunError};
use config::{ConfigError, Model, RunConfig};
use jborg::io::to_canonical_json;

#[derive(Parser)]
#[command(name = "jborg", version, about = "Spectral checks for matrix Jacobi and Dirac difference operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true, env = "JBORG_WORKERS")]
    workers: Option<usize>,
    /// Overrides the default assertion tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Overrides the seed of a random model.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalues of a finite section.
    Spectrum,
    /// Weyl–Titchmarsh functions on a z-grid.
    Weyl,
    /// Green's matrix entries with brute-force residuals.
    Greens,
    /// ξ-function grids as CSV.
    Xi,
    /// Trace-formula coefficients against their integral representation.
    Trace,
    /// Forward checks for constant two-band Jacobi coefficients.
    BorgJacobi,
    /// The Dirac family with a two-band spectrum.
    BorgDirac,
    /// Spectral measure to coefficients and back.
    Reconstruct,
    /// The full acceptance suite.
    VerifyAll,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Weyl => "weyl",
            Command::Greens => "greens",
            Command::Xi => "xi",
            Command::Trace => "trace",
            Command::BorgJacobi => "borg-jacobi",
            Command::BorgDirac => "borg-dirac",
            Command::Reconstruct => "reconstruct",
            Command::VerifyAll => "verify-all",
        }
    }

    fn default_model(self) -> Model {
        match self {
            Command::BorgDirac => Model::BorgDirac { e_minus: 1.0, e_plus: 4.0, signs: vec![1, 1] },
            _ => Model::BorgJacobi { e_minus: -1.0, e_plus: 3.0, m: 2 },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(RunError::Config(e)) => {
            eprintln!("jborg: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("jborg: numerical failure: {e}");
            ExitCode::from(3)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse(&json!({ "model": cli.command.default_model() }).to_string())?,
    };
    if let Some(seed) = cli.common.seed {
        cfg.override_seed(seed);
    }
    if let Some(tol) = cli.common.tol {
        cfg.tolerances.default = tol;
    }
    cfg.check()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, RunError> {
    let cfg = load_config(cli)?;
    if let Some(n) = cli.common.workers {
        if n == 0 {
            return Err(ConfigError::Invalid("--workers must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::Invalid(format!("cannot start {n} workers: {e}")))?;
    }
    let out_dir = cli.common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("jborg-out"));
    let name = cli.command.name();
    let outcome = commands::run(name, &cfg)?;
    let (report, passed) = assemble(name, &cfg, &outcome);
    write_outputs(&out_dir, name, &report, &outcome)?;
    let failures = &report["failures"];
    if passed {
        println!("{name}: all {} checks passed", outcome.checks.len());
    } else {
        println!("{}", serde_json::to_string(failures).unwrap_or_default());
    }
    Ok(passed)
}

fn assemble(name: &str, cfg: &RunConfig, outcome: &Outcome) -> (Value, bool) {
    let failures: Vec<Value> = outcome
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| json!({ "check": c.label, "value": c.value, "tolerance": c.tolerance }))
        .collect();
    let passed = failures.is_empty();
    let report = json!({
        "command": name,
        "config": cfg.to_json(),
        "results": outcome.results,
        "checks": outcome.checks,
        "passed": passed,
        "failures": failures,
    });
    (report, passed)
}

fn write_outputs(dir: &Path, name: &str, report: &Value, outcome: &Outcome) -> Result<(), RunError> {
    let io = |e: std::io::Error| ConfigError::Invalid(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{name}.json")), to_canonical_json(report)).map_err(io)?;
    for (file, contents) in &outcome.files {
        std::fs::write(dir.join(file), contents).map_err(io)?;
    }
    Ok(())
}
