//! Time integration of the transformed system
//! `dv/dt = -mu A v - B(v + eps z) - beta C(v + eps z) + eps alpha z + f`
//! with `u = v + eps z`, plus a direct Euler-Maruyama integrator for `u` and
//! the energy bookkeeping used to check the a priori estimates.

mod energy;
mod radius;
mod record;
mod run;
mod state;
mod step;

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::noise::NoiseConfig;
use crate::scalar::Real;
use crate::spectral::{divergence_residual, Basis, SpectralField};

pub use energy::{check_energy_inequality_h, embedding_constant, EnergyLedger};
pub use radius::{compute_absorbing_radius, AbsorbingRadius};
pub use record::TrajectoryRecord;
pub use run::{solve, solve_direct, solve_pullback, Solution};
pub use state::{read_state, write_state, SolverState};
pub use step::{step_u_direct, step_v, Stepper};

#[derive(Clone, Debug)]
pub struct ScbfParams<T: Real> {
    pub mu: T,
    pub beta: T,
    pub r: T,
    pub epsilon: T,
    pub alpha: T,
    /// Time-independent forcing `f`; also fixes the truncation.
    pub forcing: SpectralField<T>,
    pub dt: f64,
}

impl<T: Real> ScbfParams<T> {
    pub fn basis(&self) -> &Arc<Basis<T>> {
        self.forcing.basis()
    }

    pub fn k_max(&self) -> u32 {
        self.forcing.k_max()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: T| x.is_finite();
        if !(self.mu > T::zero() && finite(self.mu)) {
            return Err(invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.beta >= T::zero() && finite(self.beta)) {
            return Err(invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.r >= T::one() && finite(self.r)) {
            return Err(invalid(format!("r must be >= 1, got {}", self.r)));
        }
        if !(self.epsilon >= T::zero() && self.epsilon <= T::one()) {
            return Err(invalid(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if !(self.alpha >= T::zero() && finite(self.alpha)) {
            return Err(invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.forcing.is_finite() {
            return Err(invalid("forcing has nonfinite coefficients"));
        }
        if divergence_residual(&self.forcing) > T::of(1e-10) * (T::one() + self.forcing.max_abs()) {
            return Err(invalid("forcing is not divergence-free"));
        }
        Ok(())
    }

    /// The OU transform needs the noise to relax with the same `mu` and `alpha`.
    pub fn check_noise(&self, noise: &NoiseConfig) -> Result<()> {
        noise.validate()?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if !close(noise.mu, self.mu.f64()) || !close(noise.alpha, self.alpha.f64()) {
            return Err(invalid(format!(
                "noise relaxes with mu = {}, alpha = {} but the equation has mu = {}, alpha = {}",
                noise.mu, noise.alpha, self.mu, self.alpha
            )));
        }
        Ok(())
    }
}

/// Fixed low-mode forcing built from the modes with `|k|^2 <= 2`, scaled to
/// `||f||_H = norm`.
pub fn low_mode_forcing<T: Real>(basis: &Arc<Basis<T>>, norm: f64) -> SpectralField<T> {
    use num_complex::Complex;
    let mut f = SpectralField::from_amplitudes(basis, |w| {
        let c = match (w.k1, w.k2) {
            (0, 1) => Complex::new(1.0, 0.0),
            (1, 0) => Complex::new(0.0, -0.6),
            (1, 1) => Complex::new(0.4, 0.3),
            (1, -1) => Complex::new(-0.25, 0.5),
            _ => Complex::new(0.0, 0.0),
        };
        Complex::new(T::of(c.re), T::of(c.im))
    });
    let n = crate::spectral::norm_h(&f);
    if n > T::zero() {
        f.scale(T::of(norm) / n);
    }
    f
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    pub fn params(k: u32, epsilon: f64, forcing_norm: f64) -> ScbfParams<f64> {
        let basis = Basis::new(k).unwrap();
        ScbfParams {
            mu: 1.0,
            beta: 1.0,
            r: 3.0,
            epsilon,
            alpha: 30.0,
            forcing: low_mode_forcing(&basis, forcing_norm),
            dt: 1e-3,
        }
    }

    pub fn noise(p: &ScbfParams<f64>, amplitude: f64, seed: u64) -> NoiseConfig {
        NoiseConfig::new(amplitude, p.alpha, p.mu, seed)
    }

    pub fn field(p: &ScbfParams<f64>, seed: u64, scale: f64) -> SpectralField<f64> {
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        let mut u = crate::spectral::random_field(p.basis(), &mut rng, |l| (-(l as f64) / 4.0).exp());
        let n = crate::spectral::norm_h(&u);
        u.scale(scale / n);
        u
    }
}
