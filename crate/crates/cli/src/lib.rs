//! Experiment driver for the SCBF simulator on the periodic torus: flat
//! configuration files, one recipe per experiment and report emission.

pub mod config;
pub mod recipes;
pub mod report;

use std::path::Path;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use report::{Check, Outcome, Table};

/// Process exit codes.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

/// Validates `config`, declares its assertions in `manifest.json`, runs the
/// experiment and writes the report. Returns the outcome; errors mean exit 2.
pub fn execute(config: &ExperimentConfig, version: &str) -> Result<Outcome, String> {
    config.validate().map_err(|e| format!("invalid configuration: {e}"))?;
    let dir: &Path = &config.output_dir;
    report::write_manifest(dir, config, recipes::declared(config.experiment), version)
        .map_err(|e| format!("cannot write to {}: {e}", dir.display()))?;
    let outcome = recipes::run(config).map_err(|e| format!("{} failed: {e}", config.experiment))?;
    report::emit_report(dir, config.experiment, &outcome).map_err(|e| format!("cannot write to {}: {e}", dir.display()))?;
    Ok(outcome)
}
