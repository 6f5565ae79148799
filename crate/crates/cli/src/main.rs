use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scbf_cli::{execute, Experiment, ExperimentConfig, EXIT_ASSERTION, EXIT_ERROR, EXIT_PASS};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("SCBF_GIT_DESCRIBE"), ")");

/// Experiments for the 2D stochastic convective Brinkman-Forchheimer
/// equations on the periodic torus.
#[derive(Parser)]
#[command(name = "scbf", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    experiment: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap. Defaults to SCBF_DEFAULT_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Operator identity suite of the spectral layer.
    Identities,
    /// Stationary variance, autocorrelation and ergodic average of the OU noise.
    OuStats,
    /// Decay, convergence, OU-transform and energy-ledger checks.
    Trajectory,
    /// Pullback ensembles against the absorbing radii.
    Absorbing,
    /// Tails of attractor samples against the eigenvalues.
    Flattening,
    /// Distance of the random attractor to the deterministic one over a sweep in eps.
    Usc,
    /// Distance between two random attractors as eps - eps0 halves.
    UscPair,
    /// Time averages from two initial conditions.
    InvariantMeasure,
    /// Cocycle residual against the time discretization error.
    Cocycle,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Identities => Experiment::Identities,
            Command::OuStats => Experiment::OuStats,
            Command::Trajectory => Experiment::Trajectory,
            Command::Absorbing => Experiment::Absorbing,
            Command::Flattening => Experiment::Flattening,
            Command::Usc => Experiment::Usc,
            Command::UscPair => Experiment::UscPair,
            Command::InvariantMeasure => Experiment::InvariantMeasure,
            Command::Cocycle => Experiment::Cocycle,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::defaults(cli.experiment.experiment());
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        cfg.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    for kv in &cli.set {
        cfg.apply_override(kv).map_err(|e| format!("--set {kv}: {e}"))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if cfg.threads.is_none() {
        if let Ok(v) = std::env::var("SCBF_DEFAULT_THREADS") {
            let t = v.trim().parse().map_err(|_| format!("SCBF_DEFAULT_THREADS: cannot parse {v:?}"))?;
            cfg.threads = Some(t);
        }
    }
    cfg.validate().map_err(|e| format!("invalid configuration: {e}"))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match execute(&cfg, VERSION) {
        Ok(outcome) => {
            for c in &outcome.checks {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                println!("{verdict}  {:<28} {:>14.6e}  {}", c.name, c.measured, c.requirement());
            }
            println!("report written to {}", cfg.output_dir.display());
            if outcome.passed() {
                ExitCode::from(EXIT_PASS)
            } else {
                let failed: Vec<&str> = outcome.failed().map(|c| c.name.as_str()).collect();
                eprintln!("{}: failed assertions: {}", cfg.experiment, failed.join(", "));
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
