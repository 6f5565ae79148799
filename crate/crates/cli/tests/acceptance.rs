//! Acceptance suite: ten criteria at their stated tolerances. Each test prints
//! one `criterion N: PASS|FAIL` line with the measured values.
//!
//! Run with `cargo test -p scbf-cli --test acceptance -- --nocapture` to see the lines.

use std::sync::OnceLock;

use scbf_cli::recipes;
use scbf_cli::{Check, Experiment, ExperimentConfig, Outcome};

fn config(e: Experiment) -> ExperimentConfig {
    ExperimentConfig::defaults(e)
}

fn run(cfg: &ExperimentConfig) -> Outcome {
    cfg.validate().expect("acceptance configuration is valid");
    recipes::run(cfg).unwrap_or_else(|e| panic!("{} failed to run: {e}", cfg.experiment))
}

/// Prints the verdict line for `names` (all checks when empty) and asserts.
fn verdict(criterion: u32, outcome: &Outcome, names: &[&str]) {
    let checks: Vec<_> = if names.is_empty() {
        outcome.checks.iter().collect()
    } else {
        names.iter().map(|n| outcome.check(n).unwrap_or_else(|| panic!("no check {n}"))).collect()
    };
    let pass = checks.iter().all(|c| c.pass);
    let detail: Vec<String> =
        checks.iter().map(|c| format!("{}={:.4e} {}", c.name, c.measured, c.requirement())).collect();
    println!("criterion {criterion}: {}  {}", if pass { "PASS" } else { "FAIL" }, detail.join("; "));
    for c in checks {
        assert!(c.pass, "criterion {criterion}: {} = {} violates {}", c.name, c.measured, c.requirement());
    }
}

/// The trajectory recipe serves criteria 3, 4 and 6; it runs once per process.
fn trajectory() -> &'static Outcome {
    static OUT: OnceLock<Outcome> = OnceLock::new();
    OUT.get_or_init(|| {
        let mut cfg = config(Experiment::Trajectory);
        cfg.k_max = 16;
        cfg.dt = 1e-3;
        cfg.r = 3.0;
        cfg.epsilon = 0.5;
        run(&cfg)
    })
}

#[test]
fn criterion_01_operator_identities() {
    let mut cfg = config(Experiment::Identities);
    cfg.k_max = 8;
    cfg.samples = 1000;
    verdict(1, &run(&cfg), &[]);
}

#[test]
fn criterion_02_ou_statistics() {
    let mut cfg = config(Experiment::OuStats);
    cfg.samples = 100_000;
    cfg.dt = 0.01;
    let out = run(&cfg);
    assert_eq!(out.value("averaging_time"), Some(1000.0));
    verdict(2, &out, &[]);
}

#[test]
fn criterion_03_solver_convergence() {
    verdict(3, trajectory(), &["richardson_ratio", "single_mode_decay"]);
}

#[test]
fn criterion_04_ou_transform_equivalence() {
    verdict(4, trajectory(), &["ou_transform_gap", "ou_transform_ratio"]);
}

#[test]
fn criterion_05_cocycle() {
    let mut cfg = config(Experiment::Cocycle);
    cfg.cocycle_t = vec![1.0, 2.0];
    cfg.cocycle_s = vec![1.0, 0.5];
    cfg.epsilon = 0.5;
    verdict(5, &run(&cfg), &[]);
}

#[test]
fn criterion_06_energy_inequality() {
    verdict(6, trajectory(), &["energy_ledger", "energy_ledger_refinement", "decay_bound"]);
}

#[test]
fn criterion_07_absorbing_sets() {
    let cfg = config(Experiment::Absorbing);
    assert!(cfg.schedule.is_empty(), "the schedule is derived from the measured entry time");
    verdict(7, &run(&cfg), &[]);
}

#[test]
fn criterion_08_flattening() {
    verdict(8, &run(&config(Experiment::Flattening)), &[]);
}

#[test]
fn criterion_09_upper_semicontinuity() {
    let mut cfg = config(Experiment::Usc);
    cfg.epsilons = vec![0.5, 0.25, 0.1, 0.05];
    cfg.forcing_norm = 0.0;
    let sweep = run(&cfg);
    assert_eq!(sweep.table("usc.csv").map(|t| t.rows.len()), Some(4));
    let mut cfg = config(Experiment::UscPair);
    cfg.forcing_norm = 0.0;
    (cfg.eps, cfg.eps0) = (0.35, 0.25);
    let pair = run(&cfg);
    let mut both = sweep.clone();
    both.checks.extend(pair.checks);
    verdict(9, &both, &[]);
}

#[test]
fn criterion_10_invariant_measure() {
    let mut cfg = config(Experiment::InvariantMeasure);
    cfg.total_time = 500.0;
    let mut first = run(&cfg);
    let again = run(&cfg);
    let differing = first
        .tables
        .iter()
        .zip(&again.tables)
        .filter(|(a, b)| a.to_csv().unwrap() != b.to_csv().unwrap())
        .count();
    first.checks.push(Check::at_most("rerun_differing_tables", differing as f64, 0.0));
    verdict(10, &first, &[]);
}
