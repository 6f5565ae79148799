use serde::{Deserialize, Serialize};

use super::stats::batch_means;
use crate::error::{invalid, Result, ScbfError};
use crate::noise::{quanta, NoiseConfig, OuStream};
use crate::scalar::Real;
use crate::solver::{ScbfParams, Stepper};
use crate::spectral::SpectralField;

/// Functional averaged along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    /// `||u||_H^2`
    EnergyH,
    /// `||u||_V^2`
    EnergyV,
    /// `(2 pi)^2 sum |u_hat(k)|^2` over the shell `lo <= |k|^2 < hi`.
    Band { lo: u32, hi: u32 },
}

impl Observable {
    pub fn evaluate<T: Real>(&self, u: &SpectralField<T>) -> f64 {
        let basis = u.basis();
        let spec = basis.spectrum();
        let mut acc = 0.0;
        for (i, c) in u.coeffs().iter().enumerate() {
            let e = (c[0].norm_sqr() + c[1].norm_sqr()).f64();
            let lambda = spec.eigenvalue(i);
            acc += match *self {
                Observable::EnergyH => e,
                Observable::EnergyV => lambda as f64 * e,
                Observable::Band { lo, hi } => {
                    if lambda >= lo && lambda < hi {
                        e
                    } else {
                        0.0
                    }
                }
            };
        }
        std::f64::consts::TAU.powi(2) * acc
    }
}

impl std::str::FromStr for Observable {
    type Err = ScbfError;

    /// `H`, `V` or `band:lo:hi`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Observable::EnergyH),
            "V" | "v" => Ok(Observable::EnergyV),
            _ => {
                let parts: Vec<&str> = s.split(':').collect();
                match parts.as_slice() {
                    ["band", lo, hi] => {
                        let lo = lo.parse().map_err(|_| invalid(format!("bad band bound {lo:?}")))?;
                        let hi = hi.parse().map_err(|_| invalid(format!("bad band bound {hi:?}")))?;
                        if lo >= hi {
                            return Err(invalid(format!("empty band {lo}..{hi}")));
                        }
                        Ok(Observable::Band { lo, hi })
                    }
                    _ => Err(invalid(format!("unknown observable {s:?}, expected H, V or band:lo:hi"))),
                }
            }
        }
    }
}

/// Ergodic average of an observable with its batch-means standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeAverage {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub batches: usize,
}

/// Number of batches used for the standard error.
const BATCHES: usize = 25;

/// `(1/(T - burn_in)) int_{burn_in}^T f(u(t)) dt` along the trajectory from `u0`
/// at time 0, with the left-point rule on the step grid.
pub fn time_average_observable<T: Real>(
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    observable: Observable,
    total_time: f64,
    burn_in: f64,
    u0: &SpectralField<T>,
) -> Result<TimeAverage> {
    if !(burn_in > 0.0 && total_time > burn_in) {
        return Err(invalid(format!("need T > burn_in > 0, got T = {total_time}, burn_in = {burn_in}")));
    }
    params.validate()?;
    u0.check_shape(&params.forcing)?;
    let eps = params.epsilon;
    if eps > T::zero() {
        params.check_noise(noise)?;
    }
    let dt = params.dt;
    let steps = quanta(total_time, dt)? as usize;
    let skip = quanta(burn_in, dt)? as usize;
    let basis = params.basis();
    let active = eps > T::zero() && noise.amplitude > 0.0;
    let mut stream = if active { Some(OuStream::new(basis, noise, 0.0, dt)?) } else { None };
    let mut z = SpectralField::zeros(basis);
    if let Some(s) = &stream {
        s.current_into(&mut z);
    }
    let mut v = u0.clone();
    v.axpy(-eps, &z);
    let mut u = u0.clone();
    let mut stepper = Stepper::new(params)?;
    let mut series = Vec::with_capacity(steps - skip);
    for n in 0..steps {
        if n >= skip {
            u.coeffs_mut().copy_from_slice(v.coeffs());
            u.axpy(eps, &z);
            series.push(observable.evaluate(&u));
        }
        stepper.advance_v(&mut v, &z);
        if !v.is_finite() {
            return Err(ScbfError::Diverged { step: n + 1, time: (n + 1) as f64 * dt });
        }
        if let Some(s) = stream.as_mut() {
            s.advance();
            s.current_into(&mut z);
        }
    }
    let (mean, std_error) = batch_means(&series, BATCHES)?;
    Ok(TimeAverage { mean, std_error, samples: series.len(), batches: BATCHES })
}
