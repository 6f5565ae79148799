use crate::error::{invalid, Result};
use crate::noise::{quanta, NoiseConfig};
use crate::scalar::Real;
use crate::solver::{solve, ScbfParams};
use crate::spectral::{norm_h, SpectralField};

fn flow<T: Real>(x: &SpectralField<T>, t: f64, params: &ScbfParams<T>, noise: &NoiseConfig) -> Result<SpectralField<T>> {
    Ok(solve(x, 0.0, t, params, noise, false)?.u)
}

/// `||phi(t + s, omega) x0 - phi(t, theta_s omega) phi(s, omega) x0||_H`, where
/// `theta_s omega` is the same increment stream shifted by `s`.
pub fn cocycle_residual<T: Real>(
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    x0: &SpectralField<T>,
    t: f64,
    s: f64,
) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) {
        return Err(invalid(format!("cocycle times must be >= 0, got t = {t}, s = {s}")));
    }
    let direct = flow(x0, t + s, params, noise)?;
    let first = flow(x0, s, params, noise)?;
    let composed = flow(&first, t, params, &noise.shifted(s)?)?;
    Ok(norm_h(&(&direct - &composed)).f64())
}

/// `||phi_dt(horizon) x0 - phi_{dt/2}(horizon) x0||_H`, the size of the time
/// discretization error over `horizon`. Both runs use a noise lattice fine
/// enough for the half step.
pub fn local_truncation_scale<T: Real>(
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    x0: &SpectralField<T>,
    horizon: f64,
) -> Result<f64> {
    let mut fine = noise.clone();
    if params.dt / 2.0 < noise.quantum {
        fine.quantum = params.dt / 2.0;
        fine.shift = noise.shift * quanta(noise.quantum, fine.quantum)?;
    }
    let coarse = flow(x0, horizon, params, &fine)?;
    let mut half = params.clone();
    half.dt = params.dt / 2.0;
    let refined = flow(x0, horizon, &half, &fine)?;
    Ok(norm_h(&(&coarse - &refined)).f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::testutil::{field, noise, params};

    #[test]
    fn trivial_compositions_are_exact() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 4);
        let x = field(&p, 1, 2.0);
        assert_eq!(cocycle_residual(&p, &nz, &x, 0.0, 0.3).unwrap(), 0.0);
        assert_eq!(cocycle_residual(&p, &nz, &x, 0.3, 0.0).unwrap(), 0.0);
        assert!(cocycle_residual(&p, &nz, &x, -1.0, 0.0).is_err());
    }

    #[test]
    fn deterministic_semigroup() {
        let p = params(8, 0.0, 1.0);
        let nz = noise(&p, 0.1, 4);
        let x = field(&p, 2, 2.0);
        assert!(cocycle_residual(&p, &nz, &x, 0.3, 0.2).unwrap() <= 1e-12);
    }

    #[test]
    fn stochastic_cocycle_within_truncation_scale() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 5);
        let x = field(&p, 3, 2.0);
        let res = cocycle_residual(&p, &nz, &x, 0.3, 0.2).unwrap();
        let scale = local_truncation_scale(&p, &nz, &x, 0.5).unwrap();
        assert!(scale > 0.0);
        assert!(res <= 10.0 * scale, "{res} vs {scale}");
    }
}
