use super::energy::EnergyLedger;
use super::step::{is_finite, Stepper};
use super::{ScbfParams, TrajectoryRecord};
use crate::error::{invalid, Result, ScbfError};
use crate::noise::{quanta, NoiseConfig, OuStream};
use crate::scalar::Real;
use crate::spectral::{weighted_norm2, SpectralField};

/// Terminal state of a run: `u = v + eps z` together with its parts.
#[derive(Clone, Debug)]
pub struct Solution<T: Real> {
    pub u: SpectralField<T>,
    pub v: SpectralField<T>,
    pub z: SpectralField<T>,
    pub record: TrajectoryRecord,
}

fn norms<T: Real>(u: &SpectralField<T>) -> [f64; 3] {
    [weighted_norm2(u, 0).f64(), weighted_norm2(u, 1).f64(), weighted_norm2(u, 2).f64()]
}

/// Integrates the transformed system from `u(t0) = u0` to `t1` along the noise
/// sample `noise`. With `record` set, every time level is logged.
pub fn solve<T: Real>(
    u0: &SpectralField<T>,
    t0: f64,
    t1: f64,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    record: bool,
) -> Result<Solution<T>> {
    params.validate()?;
    u0.check_shape(&params.forcing)?;
    if !is_finite(u0) {
        return Err(ScbfError::InvalidInput("initial state has nonfinite coefficients".into()));
    }
    if !(t1 >= t0) {
        return Err(invalid(format!("end time {t1} precedes start time {t0}")));
    }
    let dt = params.dt;
    let steps = quanta(t1 - t0, dt)? as usize;
    let basis = params.basis();
    let eps = params.epsilon;
    let active = eps > T::zero() && noise.amplitude > 0.0;
    if eps > T::zero() {
        params.check_noise(noise)?;
    }
    let mut stream = if active { Some(OuStream::new(basis, noise, t0, dt)?) } else { None };
    let mut z = SpectralField::zeros(basis);
    if let Some(s) = &stream {
        s.current_into(&mut z);
    }
    let mut v = u0.clone();
    v.axpy(-eps, &z);
    if steps == 0 {
        return Ok(Solution { u: u0.clone(), v, z, record: TrajectoryRecord::default() });
    }

    let mut stepper = Stepper::new(params)?;
    let ledger = EnergyLedger::new(params);
    let mut rec = TrajectoryRecord::default();
    let mut u = u0.clone();
    let mut v_h2 = weighted_norm2(&v, 0).f64();
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let z_v2 = weighted_norm2(&z, 1).f64();
        if record {
            u.coeffs_mut().copy_from_slice(v.coeffs());
            u.axpy(eps, &z);
            let [h, vv, _] = norms(&u);
            let [th, tv, ta] = norms(&v);
            rec.times.push(t);
            rec.h_norm2.push(h);
            rec.v_norm2.push(vv);
            rec.transformed_h2.push(th);
            rec.transformed_v2.push(tv);
            rec.transformed_a2.push(ta);
            rec.noise_h2.push(weighted_norm2(&z, 0).f64());
            rec.noise_v2.push(z_v2);
        }
        let lr = stepper.advance_v(&mut v, &z).f64();
        let next = weighted_norm2(&v, 0).f64();
        if !next.is_finite() || !is_finite(&v) {
            return Err(ScbfError::Diverged { step: n + 1, time: t + dt });
        }
        if record {
            rec.lr1_norm.push(lr);
            rec.ledger.push(ledger.residual(v_h2, next, z_v2, dt));
        }
        v_h2 = next;
        if let Some(s) = stream.as_mut() {
            s.advance();
            s.current_into(&mut z);
        }
    }
    u.coeffs_mut().copy_from_slice(v.coeffs());
    u.axpy(eps, &z);
    if record {
        let [h, vv, _] = norms(&u);
        let [th, tv, ta] = norms(&v);
        rec.times.push(t0 + steps as f64 * dt);
        rec.h_norm2.push(h);
        rec.v_norm2.push(vv);
        rec.lr1_norm.push(stepper.lr1_norm(&u).f64());
        rec.transformed_h2.push(th);
        rec.transformed_v2.push(tv);
        rec.transformed_a2.push(ta);
        rec.noise_h2.push(weighted_norm2(&z, 0).f64());
        rec.noise_v2.push(weighted_norm2(&z, 1).f64());
    }
    Ok(Solution { u, v, z, record: rec })
}

/// Pullback evolution from time `s <= 0` to the present: `u(0, s; omega, u0)`.
pub fn solve_pullback<T: Real>(
    u0: &SpectralField<T>,
    s: f64,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
) -> Result<Solution<T>> {
    if !(s <= 0.0) {
        return Err(invalid(format!("pullback time {s} must be <= 0")));
    }
    solve(u0, s, 0.0, params, noise, true)
}

/// Exponential Euler-Maruyama for the original equation, driven by the Wiener
/// increments of the same noise sample. The record holds only the `u` series.
pub fn solve_direct<T: Real>(
    u0: &SpectralField<T>,
    t0: f64,
    t1: f64,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    record: bool,
) -> Result<Solution<T>> {
    params.validate()?;
    u0.check_shape(&params.forcing)?;
    if !(t1 >= t0) {
        return Err(invalid(format!("end time {t1} precedes start time {t0}")));
    }
    let dt = params.dt;
    let steps = quanta(t1 - t0, dt)? as usize;
    let basis = params.basis();
    let active = params.epsilon > T::zero() && noise.amplitude > 0.0;
    if params.epsilon > T::zero() {
        params.check_noise(noise)?;
    }
    let mut stream = if active { Some(OuStream::new(basis, noise, t0, dt)?) } else { None };
    let mut dw = SpectralField::zeros(basis);
    let mut u = u0.clone();
    let mut stepper = Stepper::new(params)?;
    let mut rec = TrajectoryRecord::default();
    for n in 0..steps {
        if let Some(s) = stream.as_mut() {
            s.advance_with_increment(&mut dw);
        }
        let lr = stepper.advance_u(&mut u, &dw).f64();
        if record {
            let [h, vv, _] = norms(&u);
            rec.times.push(t0 + (n + 1) as f64 * dt);
            rec.h_norm2.push(h);
            rec.v_norm2.push(vv);
            rec.lr1_norm.push(lr);
        }
        if !is_finite(&u) {
            return Err(ScbfError::Diverged { step: n + 1, time: t0 + (n + 1) as f64 * dt });
        }
    }
    let z = match &stream {
        Some(s) => s.current(),
        None => SpectralField::zeros(basis),
    };
    let mut v = u.clone();
    v.axpy(-params.epsilon, &z);
    Ok(Solution { u, v, z, record: rec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::testutil::{field, noise, params};
    use crate::spectral::norm_h;

    #[test]
    fn zero_length_pullback_returns_the_input() {
        let p = params(8, 0.5, 1.0);
        let u0 = field(&p, 1, 2.0);
        let sol = solve_pullback(&u0, 0.0, &p, &noise(&p, 0.1, 9)).unwrap();
        assert_eq!(sol.u, u0);
        assert!(sol.record.is_empty());
    }

    #[test]
    fn deterministic_limit_matches_direct_integrator() {
        let p = params(8, 0.0, 1.0);
        let u0 = field(&p, 2, 2.0);
        let nz = noise(&p, 0.1, 9);
        let a = solve(&u0, -0.2, 0.0, &p, &nz, false).unwrap();
        let b = solve_direct(&u0, -0.2, 0.0, &p, &nz, false).unwrap();
        assert_eq!(a.u.coeffs(), b.u.coeffs());
    }

    #[test]
    fn record_layout() {
        let p = params(8, 0.5, 1.0);
        let u0 = field(&p, 3, 2.0);
        let sol = solve(&u0, -0.1, 0.0, &p, &noise(&p, 0.1, 4), true).unwrap();
        let rec = &sol.record;
        assert_eq!(rec.len(), 101);
        assert_eq!(rec.ledger.len(), 100);
        assert!(rec.times.windows(2).all(|w| w[1] > w[0]));
        assert!(rec.h_norm2.iter().chain(&rec.v_norm2).chain(&rec.lr1_norm).all(|x| x.is_finite() && *x >= 0.0));
        assert!((rec.h_norm2[0] - 4.0).abs() < 1e-12);
        let mut u = sol.v.clone();
        u.axpy(0.5, &sol.z);
        assert!(norm_h(&(&u - &sol.u)) < 1e-14);
    }

    #[test]
    fn transformed_and_direct_schemes_agree_to_first_order() {
        let p = params(8, 0.5, 1.0);
        let u0 = field(&p, 5, 2.0);
        let nz = noise(&p, 0.1, 11);
        let gap = |dt: f64| {
            let mut q = p.clone();
            q.dt = dt;
            let a = solve(&u0, -0.5, 0.0, &q, &nz, false).unwrap();
            let b = solve_direct(&u0, -0.5, 0.0, &q, &nz, false).unwrap();
            norm_h(&(&a.u - &b.u)) / norm_h(&a.u)
        };
        let (g1, g2) = (gap(2e-3), gap(1e-3));
        assert!(g2 < 1e-2, "gap {g2}");
        assert!((g1 / g2 - 2.0).abs() < 0.3, "ratio {}", g1 / g2);
    }

    #[test]
    fn blow_up_is_reported() {
        let mut p = params(8, 0.0, 1.0);
        p.dt = 0.1;
        let u0 = field(&p, 6, 1e3);
        let err = solve(&u0, -5.0, 0.0, &p, &noise(&p, 0.0, 1), false).unwrap_err();
        assert!(matches!(err, ScbfError::Diverged { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = params(8, 0.5, 1.0);
        let u0 = field(&p, 7, 1.0);
        let nz = noise(&p, 0.1, 1);
        assert!(solve_pullback(&u0, 1.0, &p, &nz).is_err());
        assert!(solve(&u0, 0.0, -1.0, &p, &nz, false).is_err());
        let mut other = nz.clone();
        other.mu = 2.0;
        assert!(solve(&u0, -0.1, 0.0, &p, &other, false).is_err());
    }
}
