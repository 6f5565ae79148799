use serde::Serialize;

use super::cloud::distance;
use super::SpaceTag;
use crate::error::{invalid, Result, ScbfError};
use crate::noise::{quanta, NoiseConfig, OuStream};
use crate::scalar::Real;
use crate::solver::{solve, ScbfParams, Stepper};
use crate::spectral::{norm_lp, weighted_norm2, SpectralField};

/// Measured `||eta(t)||^2 = ||v_eps(t) - u(t)||^2` against the Gronwall bound,
/// where `u` is the deterministic flow from the same initial state.
#[derive(Clone, Debug, Serialize)]
pub struct GronwallTrace {
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
}

impl GronwallTrace {
    /// Largest `measured / bound`; at most 1 when the bound holds.
    pub fn max_ratio(&self) -> f64 {
        self.measured.iter().zip(&self.bound).map(|(m, b)| if *b > 0.0 { m / b } else { 0.0 }).fold(0.0, f64::max)
    }
}

/// Runs the `eps` system and the deterministic system (`eps = 0`) from `u0`
/// at time `s` to 0 and tracks `eta = v_eps - u`. The bound integrates
/// `d||eta||^2/dt <= a ||eta||^2 + b` with
///
/// `a = (6/mu)(||u||_V^2 + eps^2 ||z||_V^2)`,
/// `b = 6 eps^4 ||z||_V^4/(mu lambda_1) + 24 eps^2 ||z||_V^2 ||u||_V^2/(mu lambda_1)
///    + 3 eps^2 alpha^2 ||z||_H^2/(mu lambda_1)
///    + 2 eps beta (||u_eps||_{L^{r+1}}^r + ||u||_{L^{r+1}}^r) ||z||_{L^{r+1}}`,
///
/// obtained from Ladyzhenskaya's inequality `||w||_{L^4}^2 <= sqrt(2) ||w||_H ||w||_V`,
/// Young's inequality and monotonicity of the damping.
pub fn usc_gronwall<T: Real>(
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    u0: &SpectralField<T>,
    s: f64,
) -> Result<GronwallTrace> {
    if !(s < 0.0) {
        return Err(invalid(format!("start time {s} must be negative")));
    }
    params.validate()?;
    params.check_noise(noise)?;
    u0.check_shape(&params.forcing)?;
    let dt = params.dt;
    let steps = quanta(-s, dt)? as usize;
    let basis = params.basis();
    let mut det = params.clone();
    det.epsilon = T::zero();
    let (mu, beta, r) = (params.mu.f64(), params.beta.f64(), params.r.f64());
    let (eps, alpha) = (params.epsilon.f64(), params.alpha.f64());
    let lambda1 = basis.lambda1().f64();
    let mut stream = OuStream::new(basis, noise, s, dt)?;
    let mut z = stream.current();
    let mut v = u0.clone();
    v.axpy(-params.epsilon, &z);
    let mut u = u0.clone();
    let (mut sv, mut su) = (Stepper::new(params)?, Stepper::new(&det)?);
    let zero = SpectralField::zeros(basis);
    let mut trace = GronwallTrace { times: Vec::new(), measured: Vec::new(), bound: Vec::new() };
    let mut bound = eps * eps * weighted_norm2(&z, 0).f64();
    for n in 0..=steps {
        let measured = distance(&v, &u, SpaceTag::H)?.powi(2);
        trace.times.push(s + n as f64 * dt);
        trace.measured.push(measured);
        trace.bound.push(bound);
        if n == steps {
            break;
        }
        let (zh2, zv2) = (weighted_norm2(&z, 0).f64(), weighted_norm2(&z, 1).f64());
        let uv2 = weighted_norm2(&u, 1).f64();
        let zl = norm_lp(&z, r + 1.0)?.f64();
        let lw = sv.advance_v(&mut v, &z).f64();
        let lu = su.advance_v(&mut u, &zero).f64();
        let a = 6.0 / mu * (uv2 + eps * eps * zv2);
        let b = 6.0 * eps.powi(4) * zv2 * zv2 / (mu * lambda1)
            + 24.0 * eps * eps * zv2 * uv2 / (mu * lambda1)
            + 3.0 * eps * eps * alpha * alpha * zh2 / (mu * lambda1)
            + 2.0 * eps * beta * (lw.powf(r / (r + 1.0)) + lu.powf(r / (r + 1.0))) * zl;
        let gain = if a * dt < 1e-12 { dt } else { (a * dt).exp_m1() / a };
        bound = bound * (a * dt).exp() + b * gain;
        if !v.is_finite() || !u.is_finite() {
            return Err(ScbfError::Diverged { step: n + 1, time: s + (n + 1) as f64 * dt });
        }
        stream.advance();
        stream.current_into(&mut z);
    }
    Ok(trace)
}

/// `||phi(u0 + eta d) - phi(u0)|| / eta` at time 0 for a start at `s`, with `d`
/// normalized in the tagged norm. Stable values under halving of `eta`
/// indicate Lipschitz dependence on the initial state.
pub fn lipschitz_ratio<T: Real>(
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    u0: &SpectralField<T>,
    direction: &SpectralField<T>,
    eta: f64,
    s: f64,
    tag: SpaceTag,
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(invalid(format!("perturbation size must be positive, got {eta}")));
    }
    let zero = SpectralField::zeros(u0.basis());
    let norm = distance(direction, &zero, tag)?;
    if norm == 0.0 {
        return Err(invalid("perturbation direction is zero"));
    }
    let mut moved = u0.clone();
    moved.axpy(T::of(eta / norm), direction);
    let a = solve(u0, s, 0.0, params, noise, false)?.u;
    let b = solve(&moved, s, 0.0, params, noise, false)?.u;
    Ok(distance(&a, &b, tag)? / eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::testutil::{field, noise, params};

    #[test]
    fn gronwall_bound_dominates() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 3);
        let u0 = field(&p, 1, 3.0);
        let tr = usc_gronwall(&p, &nz, &u0, -1.0).unwrap();
        assert_eq!(tr.times.len(), 1001);
        assert!((tr.measured[0] - tr.bound[0]).abs() <= 1e-12 * tr.bound[0]);
        assert!(tr.max_ratio() <= 1.0 + 1e-9, "{}", tr.max_ratio());
    }

    #[test]
    fn lipschitz_ratio_is_stable() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 3);
        let u0 = field(&p, 1, 3.0);
        let d = field(&p, 2, 1.0);
        for tag in [SpaceTag::H, SpaceTag::V] {
            let a = lipschitz_ratio(&p, &nz, &u0, &d, 1e-4, -1.0, tag).unwrap();
            let b = lipschitz_ratio(&p, &nz, &u0, &d, 5e-5, -1.0, tag).unwrap();
            assert!(a.is_finite() && (a - b).abs() <= 1e-2 * a, "{tag:?}: {a} vs {b}");
        }
    }
}
