use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, GridSpec, Profile};
use crate::report::SuiteReport;
use crate::{counterexample, norm, parallel, solver, stability, LabError};

#[derive(Debug, Parser)]
#[command(name = "transport-lab", version, about = "Experiments for transport equations with rough divergence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config; missing fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for `<subcommand>.json` and CSV tables. Without it the
    /// JSON record goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Single γ ∈ (1, 2) for the integrability runs.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Comma-separated θ values for the non-uniqueness runs.
    #[arg(long, global = true, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    /// `nx,ny,nt` for the seeded solver or stability runs.
    #[arg(long, global = true)]
    pub grid: Option<GridSpec>,
    #[arg(long, global = true, value_enum)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Orlicz norms, the indicator oracle and the Hölder/interpolation checks.
    Norm,
    /// Integrability of the counterexample divergence and non-uniqueness.
    Counterexample,
    /// A-priori bounds, conservation, commutator ladders, product and renormalization.
    Solver,
    /// Comparator, quantitative bounds and the stability ladder.
    Stability,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::Counterexample => "counterexample",
            Command::Solver => "solver",
            Command::Stability => "stability",
        }
    }
}

/// Applies the flags on top of the file config (or the defaults).
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let only = |flag: &str, allowed: Command| {
        if cli.command == allowed {
            Ok(())
        } else {
            Err(LabError::Config(format!("--{flag} does not apply to `{}`", cli.command.name())))
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(g) = cli.gamma {
        only("gamma", Command::Counterexample)?;
        cfg.counterexample.gammas = vec![g];
    }
    if let Some(t) = &cli.thetas {
        only("thetas", Command::Counterexample)?;
        cfg.counterexample.thetas = t.clone();
    }
    if let Some(p) = cli.profile {
        only("profile", Command::Counterexample)?;
        cfg.counterexample.profile = Some(p);
    }
    if let Some(g) = cli.grid {
        match cli.command {
            Command::Solver => {
                cfg.solver.apriori.grid = g;
                cfg.solver.conservation.grid = g;
                cfg.solver.product.grid = g;
            }
            Command::Stability => cfg.stability.quant.grid = g,
            _ => return Err(LabError::Config(format!("--grid does not apply to `{}`", cli.command.name()))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_suite(command: Command, cfg: &ExperimentConfig) -> Result<SuiteReport, LabError> {
    parallel::with_pool(|| match command {
        Command::Norm => norm::run(cfg),
        Command::Counterexample => counterexample::run(cfg),
        Command::Solver => solver::run(cfg),
        Command::Stability => stability::run(cfg),
    })?
}

/// Full CLI: parse, run, write, and return the exit code
/// (0 pass, 1 a checked invariant failed, 2 usage or config error).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, LabError> {
    let cfg = resolve(cli)?;
    let report = run_suite(cli.command, &cfg)?;
    match &cli.out {
        Some(dir) => report.write(dir, &cfg)?,
        None => println!("{}", serde_json::to_string_pretty(&report.to_json(&cfg)).expect("records serialize")),
    }
    for c in &report.checks {
        let tag = match (c.passed, c.gating) {
            (true, _) => "ok  ",
            (false, true) => "FAIL",
            (false, false) => "note",
        };
        eprintln!("{tag} {}: {}", c.name, c.detail);
    }
    let failed = report.failed_gating();
    if failed.is_empty() {
        Ok(0)
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        eprintln!("invariant failed: {}", names.join(", "));
        Ok(1)
    }
}
