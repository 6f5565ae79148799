//! Ornstein-Uhlenbeck noise `dz + (mu A + alpha) z dt = dW`, solved exactly mode by mode.
//!
//! Mode `k` of the Wiener process has intensity `sigma_k = sigma_0 lambda_k^{-s'}`
//! along `k_perp/|k|`. Complex normals are drawn from counter-keyed generators
//! indexed by `(seed, k, step)`, so a path does not depend on the truncation,
//! on the thread that computes it, or on where it was started.

mod path;
mod stream;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral::StokesSpectrum;

pub use path::{generate_path, read_path, write_path, OuPath};
pub use stream::{ou_step, sample_stationary_initial, standard_complex_normal, OuStream};

pub const DEFAULT_DECAY_EXPONENT: f64 = 1.76;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// `s'` in `sigma_k = sigma_0 lambda_k^{-s'}`.
    pub decay_exponent: f64,
    /// `sigma_0`.
    pub amplitude: f64,
    pub alpha: f64,
    pub mu: f64,
    pub seed: u64,
    /// Spacing of the lattice on which Brownian increments are generated. Step
    /// sizes must be integer multiples of it; a step of `m` quanta uses the
    /// normalized sum of `m` lattice normals, which keeps paths consistent
    /// under step refinement.
    pub quantum: f64,
    /// Time shift `theta_h`, counted in quanta.
    pub shift: i64,
}

impl NoiseConfig {
    pub fn new(amplitude: f64, alpha: f64, mu: f64, seed: u64) -> Self {
        Self { decay_exponent: DEFAULT_DECAY_EXPONENT, amplitude, alpha, mu, seed, quantum: 1e-3, shift: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid(format!("noise amplitude must be finite and >= 0, got {}", self.amplitude)));
        }
        if !self.decay_exponent.is_finite() {
            return Err(invalid("noise decay exponent must be finite"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.quantum > 0.0 && self.quantum.is_finite()) {
            return Err(invalid(format!("noise quantum must be positive, got {}", self.quantum)));
        }
        Ok(())
    }

    pub fn sigma(&self, lambda: f64) -> f64 {
        self.amplitude * lambda.powf(-self.decay_exponent)
    }

    /// Relaxation rate `mu lambda + alpha` of a mode.
    pub fn rate(&self, lambda: f64) -> f64 {
        self.mu * lambda + self.alpha
    }

    /// Stationary `E|c|^2 = sigma^2 / (2 (mu lambda + alpha))` of one mode amplitude.
    pub fn stationary_variance(&self, lambda: f64) -> f64 {
        let s = self.sigma(lambda);
        s * s / (2.0 * self.rate(lambda))
    }

    /// Configuration of the shifted sample `theta_h omega`.
    pub fn shifted(&self, h: f64) -> Result<Self> {
        let q = quanta(h, self.quantum)?;
        Ok(Self { shift: self.shift + q, ..self.clone() })
    }

    /// Number of quanta in a step of size `dt`.
    pub fn quanta_per_step(&self, dt: f64) -> Result<i64> {
        let m = quanta(dt, self.quantum)?;
        if m <= 0 {
            return Err(invalid(format!("step {dt} must be positive")));
        }
        Ok(m)
    }
}

/// `x / unit` as an integer, if it is one up to rounding.
pub(crate) fn quanta(x: f64, unit: f64) -> Result<i64> {
    let q = x / unit;
    let r = q.round();
    if !q.is_finite() || (q - r).abs() > 1e-6 {
        return Err(invalid(format!("{x} is not a multiple of {unit}")));
    }
    Ok(r as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuMoments {
    /// `E ||z||_H^2`
    pub mean_h2: f64,
    /// `E ||z||_V^2`
    pub mean_v2: f64,
}

/// Stationary moments summed over every retained mode (both `k` and `-k`).
pub fn analytic_moments(spectrum: &StokesSpectrum, config: &NoiseConfig) -> OuMoments {
    let area = std::f64::consts::TAU.powi(2);
    let (mut h, mut v) = (0.0, 0.0);
    for w in spectrum.modes() {
        let l = w.norm2() as f64;
        let e = config.stationary_variance(l);
        h += e;
        v += l * e;
    }
    OuMoments { mean_h2: area * h, mean_v2: area * v }
}

/// Smallest `alpha >= 0` with `E ||z||_V^2 <= mu^2 lambda_1 / 16`. Above it the
/// exponential weights in the absorbing radius decay almost surely.
pub fn alpha0(spectrum: &StokesSpectrum, config: &NoiseConfig) -> f64 {
    let target = config.mu * config.mu / 16.0;
    let v2 = |a: f64| analytic_moments(spectrum, &NoiseConfig { alpha: a, ..config.clone() }).mean_v2;
    if v2(0.0) <= target {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while v2(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v2(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_basis;

    #[test]
    fn moments_single_shell() {
        // K = 1: four modes with lambda = 1
        let s = build_basis(1).unwrap();
        let c = NoiseConfig::new(1.0, 0.0, 1.0, 0);
        let m = analytic_moments(&s, &c);
        let area = std::f64::consts::TAU.powi(2);
        assert!((m.mean_h2 - area * 4.0 * 0.5).abs() < 1e-12);
        assert!((m.mean_v2 - m.mean_h2).abs() < 1e-12);
    }

    #[test]
    fn alpha0_meets_threshold() {
        let s = build_basis(8).unwrap();
        let c = NoiseConfig::new(0.1, 0.0, 1.0, 0);
        let a = alpha0(&s, &c);
        assert!(a > 0.0);
        let at = |x: f64| analytic_moments(&s, &NoiseConfig { alpha: x, ..c.clone() }).mean_v2;
        assert!(at(a) <= 1.0 / 16.0 * (1.0 + 1e-12));
        assert!(at(a * 0.999) > 1.0 / 16.0);
        assert_eq!(alpha0(&s, &NoiseConfig::new(0.0, 0.0, 1.0, 0)), 0.0);
    }

    #[test]
    fn shift_counts_quanta() {
        let c = NoiseConfig::new(1.0, 0.0, 1.0, 0);
        assert_eq!(c.shifted(1.5).unwrap().shift, 1500);
        assert!(c.shifted(1.00005).is_err());
        assert_eq!(c.quanta_per_step(4e-3).unwrap(), 4);
    }
}
