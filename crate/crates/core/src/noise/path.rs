use std::io::{Read, Write};
use std::sync::Arc;

use super::{quanta, NoiseConfig, OuStream};
use crate::error::{invalid, Result, ScbfError};
use crate::scalar::Real;
use crate::spectral::checkpoint::{get_f64, get_u32, get_u64, put_f64, put_u32, put_u64, read_field, write_field};
use crate::spectral::{Basis, SpectralField};

/// Materialized OU path `z(t0 + n dt)`, `n = 0..=steps`.
#[derive(Clone, Debug)]
pub struct OuPath<T: Real> {
    pub t0: f64,
    pub dt: f64,
    pub seed: u64,
    pub values: Vec<SpectralField<T>>,
}

impl<T: Real> OuPath<T> {
    pub fn steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps())
    }
}

/// Path on `[t0, t_end]` with step `dt`. Equal configurations give bit-identical paths.
pub fn generate_path<T: Real>(
    basis: &Arc<Basis<T>>,
    config: &NoiseConfig,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<OuPath<T>> {
    if !(t_end >= t0) {
        return Err(invalid(format!("path end {t_end} precedes its start {t0}")));
    }
    let steps = quanta(t_end - t0, dt)?;
    let mut stream = OuStream::new(basis, config, t0, dt)?;
    let mut values = Vec::with_capacity(steps as usize + 1);
    values.push(stream.current());
    for _ in 0..steps {
        stream.advance();
        values.push(stream.current());
    }
    Ok(OuPath { t0, dt, seed: config.seed, values })
}

/// Writes `(t0, dt, steps, seed)` followed by one field checkpoint per time.
pub fn write_path<T: Real>(w: &mut impl Write, path: &OuPath<T>) -> Result<()> {
    put_f64(w, path.t0)?;
    put_f64(w, path.dt)?;
    put_u32(w, path.steps() as u32)?;
    put_u64(w, path.seed)?;
    for v in &path.values {
        write_field(w, v)?;
    }
    Ok(())
}

pub fn read_path<T: Real>(r: &mut impl Read, basis: &Arc<Basis<T>>) -> Result<OuPath<T>> {
    let t0 = get_f64(r)?;
    let dt = get_f64(r)?;
    let steps = get_u32(r)? as usize;
    let seed = get_u64(r)?;
    if !(dt > 0.0) {
        return Err(ScbfError::Checkpoint(format!("path step {dt} is not positive")));
    }
    let values = (0..=steps).map(|_| read_field(r, basis)).collect::<Result<_>>()?;
    Ok(OuPath { t0, dt, seed, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_round_trip_and_determinism() {
        let b = Basis::<f64>::new(3).unwrap();
        let c = NoiseConfig::new(0.3, 1.0, 1.0, 9);
        let p = generate_path(&b, &c, -0.1, 0.0, 1e-2).unwrap();
        assert_eq!(p.steps(), 10);
        let q = generate_path(&b, &c, -0.1, 0.0, 1e-2).unwrap();
        assert!(p.values.iter().zip(&q.values).all(|(a, b)| a == b));
        let mut buf = Vec::new();
        write_path(&mut buf, &p).unwrap();
        let back = read_path(&mut buf.as_slice(), &b).unwrap();
        assert_eq!(back.t0, p.t0);
        assert_eq!(back.seed, 9);
        assert!(back.values.iter().zip(&p.values).all(|(a, b)| a == b));
        assert!(read_path(&mut &buf[..buf.len() - 3], &b).is_err());
    }

    #[test]
    fn rejects_reversed_interval() {
        let b = Basis::<f64>::new(3).unwrap();
        assert!(generate_path(&b, &NoiseConfig::new(0.3, 1.0, 1.0, 9), 1.0, 0.0, 1e-2).is_err());
    }
}
