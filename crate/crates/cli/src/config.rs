//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! skipped. Lists are comma separated. Unknown keys are errors, so a typo never
//! silently falls back to a default.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use scbf_core::noise::{NoiseConfig, DEFAULT_DECAY_EXPONENT};
use scbf_core::rds::{Observable, PullbackSchedule};
use scbf_core::solver::{low_mode_forcing, ScbfParams};
use scbf_core::{Basis, ScbfError};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Identities,
    OuStats,
    Trajectory,
    Absorbing,
    Flattening,
    Usc,
    UscPair,
    InvariantMeasure,
    Cocycle,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Identities,
        Experiment::OuStats,
        Experiment::Trajectory,
        Experiment::Absorbing,
        Experiment::Flattening,
        Experiment::Usc,
        Experiment::UscPair,
        Experiment::InvariantMeasure,
        Experiment::Cocycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::OuStats => "ou-stats",
            Experiment::Trajectory => "trajectory",
            Experiment::Absorbing => "absorbing",
            Experiment::Flattening => "flattening",
            Experiment::Usc => "usc",
            Experiment::UscPair => "usc-pair",
            Experiment::InvariantMeasure => "invariant-measure",
            Experiment::Cocycle => "cocycle",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<ScbfError> for ConfigError {
    fn from(e: ScbfError) -> Self {
        ConfigError(e.to_string())
    }
}

/// Every setting of one experiment run. Defaults depend on the experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub k_max: u32,
    pub mu: f64,
    pub beta: f64,
    pub r: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub dt: f64,
    /// `||f||_H` of the fixed low-mode forcing.
    pub forcing_norm: f64,
    pub noise_amplitude: f64,
    pub noise_decay_exponent: f64,
    pub noise_quantum: f64,
    /// Seed of the noise sample.
    pub seed: u64,
    /// Seed of the initial points of ensembles.
    pub sample_seed: u64,
    /// Pullback times; empty means "derived from the measured entry time".
    pub schedule: Vec<f64>,
    pub ensemble_size: usize,
    /// Radius of the initial H-ball; `None` means `10 kappa13`.
    pub ball_radius: Option<f64>,
    /// Horizon of the radius quadratures.
    pub horizon: f64,
    pub epsilons: Vec<f64>,
    pub eps: f64,
    pub eps0: f64,
    pub total_time: f64,
    pub burn_in: f64,
    #[serde(serialize_with = "observable_name")]
    pub observable: Observable,
    /// Paired with `cocycle_s` element by element.
    pub cocycle_t: Vec<f64>,
    pub cocycle_s: Vec<f64>,
    /// Length of the single trajectory of `trajectory`.
    pub trajectory_time: f64,
    /// Monte Carlo sample count of `identities` and `ou-stats`.
    pub samples: usize,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
}

fn observable_name<S: serde::Serializer>(o: &Observable, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&match o {
        Observable::EnergyH => "H".to_string(),
        Observable::EnergyV => "V".to_string(),
        Observable::Band { lo, hi } => format!("band:{lo}:{hi}"),
    })
}

pub const KEYS: &[&str] = &[
    "experiment",
    "k_max",
    "mu",
    "beta",
    "r",
    "epsilon",
    "alpha",
    "dt",
    "forcing_norm",
    "noise_amplitude",
    "noise_decay_exponent",
    "noise_quantum",
    "seed",
    "sample_seed",
    "schedule",
    "ensemble_size",
    "ball_radius",
    "horizon",
    "epsilons",
    "eps",
    "eps0",
    "total_time",
    "burn_in",
    "observable",
    "cocycle_t",
    "cocycle_s",
    "trajectory_time",
    "samples",
    "output_dir",
    "threads",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError(format!("{key}: cannot parse {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v)).collect()
}

impl ExperimentConfig {
    /// Defaults of an experiment: `mu = beta = 1`, `r = 3`, `||f|| = 1`,
    /// `dt = 1e-3` and noise with `sigma_0 = 0.1`, `alpha = 30`. `trajectory` and
    /// `cocycle` run at `K_max = 16`, everything else at `K_max = 8`; the `usc`
    /// experiments use `f = 0` so that the deterministic attractor is `{0}`.
    pub fn defaults(experiment: Experiment) -> Self {
        let ensemble = matches!(
            experiment,
            Experiment::Absorbing | Experiment::Flattening | Experiment::Usc | Experiment::UscPair | Experiment::InvariantMeasure
        );
        Self {
            experiment,
            k_max: if ensemble || matches!(experiment, Experiment::Identities | Experiment::OuStats) { 8 } else { 16 },
            mu: 1.0,
            beta: 1.0,
            r: 3.0,
            epsilon: 0.5,
            alpha: 30.0,
            // ou-stats samples the noise on a coarser lag
            dt: if experiment == Experiment::OuStats { 0.01 } else { 1e-3 },
            forcing_norm: if matches!(experiment, Experiment::Usc | Experiment::UscPair) { 0.0 } else { 1.0 },
            noise_amplitude: 0.1,
            noise_decay_exponent: DEFAULT_DECAY_EXPONENT,
            noise_quantum: if experiment == Experiment::OuStats { 0.01 } else { 1e-3 },
            seed: 1,
            sample_seed: 2,
            schedule: match experiment {
                Experiment::Flattening => vec![-10.0],
                Experiment::Usc | Experiment::UscPair => vec![-10.0],
                _ => Vec::new(),
            },
            ensemble_size: 16,
            ball_radius: None,
            horizon: 40.0,
            epsilons: vec![0.5, 0.25, 0.1, 0.05],
            eps: 0.35,
            eps0: 0.25,
            total_time: 500.0,
            burn_in: 20.0,
            observable: Observable::EnergyH,
            cocycle_t: vec![1.0, 2.0],
            cocycle_s: vec![1.0, 0.5],
            trajectory_time: 2.0,
            samples: if experiment == Experiment::OuStats { 100_000 } else { 1000 },
            output_dir: PathBuf::from("out").join(experiment.name()),
            threads: None,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "experiment" => {
                let e: Experiment = v.parse()?;
                if e != self.experiment {
                    return Err(ConfigError(format!("config is for {e} but the command runs {}", self.experiment)));
                }
            }
            "k_max" => self.k_max = parse(key, v)?,
            "mu" => self.mu = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "r" => self.r = parse(key, v)?,
            "epsilon" => self.epsilon = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "dt" => self.dt = parse(key, v)?,
            "forcing_norm" => self.forcing_norm = parse(key, v)?,
            "noise_amplitude" => self.noise_amplitude = parse(key, v)?,
            "noise_decay_exponent" => self.noise_decay_exponent = parse(key, v)?,
            "noise_quantum" => self.noise_quantum = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "sample_seed" => self.sample_seed = parse(key, v)?,
            "schedule" => self.schedule = parse_list(key, v)?,
            "ensemble_size" => self.ensemble_size = parse(key, v)?,
            "ball_radius" => self.ball_radius = if v == "auto" { None } else { Some(parse(key, v)?) },
            "horizon" => self.horizon = parse(key, v)?,
            "epsilons" => self.epsilons = parse_list(key, v)?,
            "eps" => self.eps = parse(key, v)?,
            "eps0" => self.eps0 = parse(key, v)?,
            "total_time" => self.total_time = parse(key, v)?,
            "burn_in" => self.burn_in = parse(key, v)?,
            "observable" => self.observable = v.parse().map_err(|e: ScbfError| ConfigError(format!("observable: {e}")))?,
            "cocycle_t" => self.cocycle_t = parse_list(key, v)?,
            "cocycle_s" => self.cocycle_s = parse_list(key, v)?,
            "trajectory_time" => self.trajectory_time = parse(key, v)?,
            "samples" => self.samples = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "threads" => self.threads = Some(parse(key, v)?),
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every line of a config file.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value, got {line:?}", n + 1)))?;
            self.set(k, v).map_err(|e| ConfigError(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError(format!("--set expects key=value, got {kv:?}")))?;
        self.set(k, v)
    }

    pub fn params(&self) -> Result<ScbfParams<f64>, ConfigError> {
        let basis = Basis::new(self.k_max)?;
        if !(self.forcing_norm >= 0.0 && self.forcing_norm.is_finite()) {
            return Err(ConfigError(format!("forcing_norm must be finite and >= 0, got {}", self.forcing_norm)));
        }
        let params = ScbfParams {
            mu: self.mu,
            beta: self.beta,
            r: self.r,
            epsilon: self.epsilon,
            alpha: self.alpha,
            forcing: low_mode_forcing(&basis, self.forcing_norm),
            dt: self.dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn noise(&self) -> Result<NoiseConfig, ConfigError> {
        let mut n = NoiseConfig::new(self.noise_amplitude, self.alpha, self.mu, self.seed);
        n.decay_exponent = self.noise_decay_exponent;
        n.quantum = self.noise_quantum;
        n.validate()?;
        n.quanta_per_step(self.dt)?;
        Ok(n)
    }

    pub fn pullback_schedule(&self) -> Result<Option<PullbackSchedule>, ConfigError> {
        if self.schedule.is_empty() {
            return Ok(None);
        }
        Ok(Some(PullbackSchedule::new(self.schedule.clone())?))
    }

    /// Checks everything the experiment will use before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        self.params()?;
        self.noise()?;
        self.pullback_schedule()?;
        if let Some(r) = self.ball_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("ball_radius must be finite and >= 0, got {r}"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        match self.experiment {
            Experiment::Absorbing | Experiment::Flattening | Experiment::Usc | Experiment::UscPair
                if self.ensemble_size < 2 || self.ensemble_size > 256 =>
            {
                bad(format!("ensemble_size must lie in [2, 256], got {}", self.ensemble_size))
            }
            Experiment::Flattening | Experiment::Usc | Experiment::UscPair if self.schedule.is_empty() => {
                bad(format!("{} needs a pullback schedule", self.experiment))
            }
            Experiment::Absorbing if !(self.horizon > 0.0) => bad(format!("horizon must be positive, got {}", self.horizon)),
            Experiment::Usc => {
                if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e >= 0.0 && *e <= 1.0)) {
                    return bad("epsilons must be a nonempty list in [0, 1]".into());
                }
                if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
                    return bad("epsilons must be strictly decreasing".into());
                }
                Ok(())
            }
            Experiment::UscPair => {
                if !(self.eps0 > 0.0 && self.eps > self.eps0 && self.eps <= 1.0) {
                    return bad(format!("usc-pair needs 0 < eps0 < eps <= 1, got eps = {}, eps0 = {}", self.eps, self.eps0));
                }
                Ok(())
            }
            Experiment::InvariantMeasure if !(self.burn_in > 0.0 && self.total_time > self.burn_in) => {
                bad(format!("need total_time > burn_in > 0, got {} and {}", self.total_time, self.burn_in))
            }
            Experiment::Cocycle => {
                if self.cocycle_t.is_empty() || self.cocycle_t.len() != self.cocycle_s.len() {
                    return bad("cocycle_t and cocycle_s must be nonempty lists of equal length".into());
                }
                if self.cocycle_t.iter().chain(&self.cocycle_s).any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return bad("cocycle times must be finite and >= 0".into());
                }
                Ok(())
            }
            Experiment::Trajectory if !(self.trajectory_time > 0.0) => bad("trajectory_time must be positive".into()),
            Experiment::Identities | Experiment::OuStats if self.samples < 10 => {
                bad(format!("samples must be at least 10, got {}", self.samples))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_files_and_overrides() {
        let mut c = ExperimentConfig::defaults(Experiment::Usc);
        c.apply_text("# sweep\nexperiment = usc\nepsilons = 0.4, 0.2\n\nk_max=6\n").unwrap();
        assert_eq!(c.epsilons, vec![0.4, 0.2]);
        assert_eq!(c.k_max, 6);
        c.apply_override("ball_radius=3").unwrap();
        assert_eq!(c.ball_radius, Some(3.0));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_and_malformed_keys() {
        let mut c = ExperimentConfig::defaults(Experiment::Trajectory);
        assert!(c.apply_text("mu = 1\nviscosity = 2\n").unwrap_err().0.contains("line 2"));
        assert!(c.apply_text("mu 1").is_err());
        assert!(c.apply_override("mu=abc").is_err());
        assert!(c.apply_text("experiment = usc").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::defaults(Experiment::Usc);
        c.epsilons = vec![0.1, 0.5];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::defaults(Experiment::Trajectory);
        c.epsilon = 2.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::defaults(Experiment::Trajectory);
        c.dt = 1.5e-3;
        assert!(c.validate().is_err(), "step must be a multiple of the noise quantum");
        let mut c = ExperimentConfig::defaults(Experiment::UscPair);
        c.eps = 0.2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn every_experiment_has_valid_defaults() {
        for e in Experiment::ALL {
            ExperimentConfig::defaults(e).validate().unwrap();
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert_eq!(KEYS.len(), 30);
    }
}
