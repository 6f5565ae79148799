//! Little-endian binary field checkpoints:
//! `"SCBF"`, version `u32`, `K_max u32`, mode count `u32`, the wavevectors as
//! `(i32, i32)` pairs in spectrum order, then four `f64` per mode
//! (`re u1, im u1, re u2, im u2`).

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;

use super::basis::{Basis, WaveVector};
use super::field::SpectralField;
use crate::error::{Result, ScbfError};
use crate::scalar::Real;

pub const FIELD_MAGIC: &[u8; 4] = b"SCBF";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn put_u32(w: &mut impl Write, x: u32) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

pub(crate) fn put_u64(w: &mut impl Write, x: u64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

pub(crate) fn put_f64(w: &mut impl Write, x: f64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| ScbfError::Checkpoint(format!("truncated stream: {e}")))?;
    Ok(b)
}

pub(crate) fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

pub(crate) fn get_i32(r: &mut impl Read) -> Result<i32> {
    Ok(i32::from_le_bytes(take(r)?))
}

pub(crate) fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(take(r)?))
}

pub(crate) fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(take(r)?))
}

pub fn write_field<T: Real>(w: &mut impl Write, u: &SpectralField<T>) -> Result<()> {
    let s = u.basis().spectrum();
    w.write_all(FIELD_MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    put_u32(w, s.k_max())?;
    put_u32(w, s.len() as u32)?;
    for m in s.modes() {
        w.write_all(&m.k1.to_le_bytes())?;
        w.write_all(&m.k2.to_le_bytes())?;
    }
    for c in u.coeffs() {
        for z in c {
            put_f64(w, z.re.f64())?;
            put_f64(w, z.im.f64())?;
        }
    }
    Ok(())
}

/// Reads a field written by [`write_field`]. The stored mode list must match `basis`.
pub fn read_field<T: Real>(r: &mut impl Read, basis: &Arc<Basis<T>>) -> Result<SpectralField<T>> {
    let magic: [u8; 4] = take(r)?;
    if &magic != FIELD_MAGIC {
        return Err(ScbfError::Checkpoint("not a field checkpoint".into()));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(ScbfError::Checkpoint(format!("unsupported format version {version}")));
    }
    let k_max = get_u32(r)?;
    let count = get_u32(r)? as usize;
    let s = basis.spectrum();
    if k_max != s.k_max() || count != s.len() {
        return Err(ScbfError::ShapeMismatch(format!(
            "checkpoint has K_max = {k_max} with {count} modes, expected K_max = {} with {} modes",
            s.k_max(),
            s.len()
        )));
    }
    for i in 0..count {
        let w = WaveVector::new(get_i32(r)?, get_i32(r)?);
        if w != s.mode(i) {
            return Err(ScbfError::Checkpoint(format!("mode {i} is {w}, expected {}", s.mode(i))));
        }
    }
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        let mut c = [Complex::default(); 2];
        for z in &mut c {
            *z = Complex::new(T::of(get_f64(r)?), T::of(get_f64(r)?));
        }
        coeffs.push(c);
    }
    SpectralField::from_coeffs(basis, coeffs)
}
