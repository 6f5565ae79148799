//! Checkpoint of a running trajectory: a parameter block followed by the
//! forcing and the current state in the field checkpoint format.
//!
//! Layout (little-endian): magic `SCBS`, version u32, then `mu, beta, r,
//! epsilon, alpha, dt` as f64, the noise block `decay_exponent, amplitude,
//! alpha, mu` (f64), `seed` (u64), `quantum` (f64), `shift` (i64 as u64), the
//! time `t` (f64), and finally the forcing and `u(t)` as field records.

use std::io::{Read, Write};
use std::sync::Arc;

use super::ScbfParams;
use crate::error::{Result, ScbfError};
use crate::noise::NoiseConfig;
use crate::scalar::Real;
use crate::spectral::checkpoint::{get_f64, get_u32, get_u64, put_f64, put_u32, put_u64, read_field, write_field};
use crate::spectral::{Basis, SpectralField};

const MAGIC: &[u8; 4] = b"SCBS";
const VERSION: u32 = 1;

/// Everything needed to resume a run at time `time`.
#[derive(Clone, Debug)]
pub struct SolverState<T: Real> {
    pub params: ScbfParams<T>,
    pub noise: NoiseConfig,
    pub time: f64,
    pub u: SpectralField<T>,
}

pub fn write_state<T: Real>(w: &mut impl Write, state: &SolverState<T>) -> Result<()> {
    let p = &state.params;
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    for x in [p.mu, p.beta, p.r, p.epsilon, p.alpha] {
        put_f64(w, x.f64())?;
    }
    put_f64(w, p.dt)?;
    let n = &state.noise;
    for x in [n.decay_exponent, n.amplitude, n.alpha, n.mu] {
        put_f64(w, x)?;
    }
    put_u64(w, n.seed)?;
    put_f64(w, n.quantum)?;
    put_u64(w, n.shift as u64)?;
    put_f64(w, state.time)?;
    write_field(w, &p.forcing)?;
    write_field(w, &state.u)
}

pub fn read_state<T: Real>(r: &mut impl Read, basis: &Arc<Basis<T>>) -> Result<SolverState<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ScbfError::Checkpoint("not a solver state checkpoint".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(ScbfError::Checkpoint(format!("unsupported state version {version}")));
    }
    let mut q = [0.0; 5];
    for x in &mut q {
        *x = get_f64(r)?;
    }
    let dt = get_f64(r)?;
    let mut nb = [0.0; 4];
    for x in &mut nb {
        *x = get_f64(r)?;
    }
    let seed = get_u64(r)?;
    let quantum = get_f64(r)?;
    let shift = get_u64(r)? as i64;
    let time = get_f64(r)?;
    let forcing = read_field(r, basis)?;
    let u = read_field(r, basis)?;
    let params = ScbfParams {
        mu: T::of(q[0]),
        beta: T::of(q[1]),
        r: T::of(q[2]),
        epsilon: T::of(q[3]),
        alpha: T::of(q[4]),
        forcing,
        dt,
    };
    let noise = NoiseConfig { decay_exponent: nb[0], amplitude: nb[1], alpha: nb[2], mu: nb[3], seed, quantum, shift };
    params.validate().map_err(|e| ScbfError::Checkpoint(format!("invalid parameter block: {e}")))?;
    Ok(SolverState { params, noise, time, u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;
    use crate::solver::testutil::{field, noise, params};
    use crate::spectral::norm_h;

    #[test]
    fn restart_continues_the_trajectory() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 8);
        let u0 = field(&p, 1, 2.0);
        let full = solve(&u0, -0.4, 0.0, &p, &nz, false).unwrap();
        let half = solve(&u0, -0.4, -0.2, &p, &nz, false).unwrap();
        let mut buf = Vec::new();
        write_state(&mut buf, &SolverState { params: p.clone(), noise: nz.clone(), time: -0.2, u: half.u }).unwrap();
        let st = read_state(&mut buf.as_slice(), p.basis()).unwrap();
        assert_eq!(st.noise, nz);
        assert_eq!(st.params.forcing, p.forcing);
        assert_eq!(st.params.dt, p.dt);
        let rest = solve(&st.u, st.time, 0.0, &st.params, &st.noise, false).unwrap();
        assert!(norm_h(&(&rest.u - &full.u)) <= 1e-12 * norm_h(&full.u));
    }

    #[test]
    fn corrupt_state_is_rejected() {
        let p = params(4, 0.5, 1.0);
        let mut buf = Vec::new();
        let st = SolverState { params: p.clone(), noise: noise(&p, 0.1, 1), time: 0.0, u: field(&p, 1, 1.0) };
        write_state(&mut buf, &st).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_state(&mut bad.as_slice(), p.basis()), Err(ScbfError::Checkpoint(_))));
        buf.truncate(buf.len() - 3);
        assert!(read_state(&mut buf.as_slice(), p.basis()).is_err());
    }
}
