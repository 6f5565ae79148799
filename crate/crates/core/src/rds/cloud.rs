//! Distances between point clouds and the cloud file format.
//!
//! A cloud file is a header (magic `SCBA`, version u32, pullback time f64,
//! seed u64, ensemble size u32, space tag u32 (0 = H, 1 = V), diverged count
//! u32, point count u32) followed by one field checkpoint per point.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{AttractorSample, SpaceTag};
use crate::error::{Result, ScbfError};
use crate::scalar::Real;
use crate::spectral::checkpoint::{get_f64, get_u32, get_u64, put_f64, put_u32, put_u64, read_field, write_field};
use crate::spectral::{Basis, SpectralField};

const MAGIC: &[u8; 4] = b"SCBA";
const VERSION: u32 = 1;

/// `||a - b||` in the tagged norm.
pub fn distance<T: Real>(a: &SpectralField<T>, b: &SpectralField<T>, tag: SpaceTag) -> Result<f64> {
    a.check_shape(b)?;
    let basis = a.basis();
    let mut acc = 0.0;
    for (i, (x, y)) in a.coeffs().iter().zip(b.coeffs()).enumerate() {
        let w = if tag == SpaceTag::V { basis.lambda(i).f64() } else { 1.0 };
        let d = (x[0] - y[0]).norm_sqr() + (x[1] - y[1]).norm_sqr();
        acc += w * d.f64();
    }
    Ok((std::f64::consts::TAU.powi(2) * acc).sqrt())
}

/// `max_{a in A} min_{b in B} ||a - b||`.
pub fn hausdorff_points<T: Real>(a: &[SpectralField<T>], b: &[SpectralField<T>], tag: SpaceTag) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(ScbfError::InvalidInput("Hausdorff semidistance of an empty cloud".into()));
    }
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            best = best.min(distance(x, y, tag)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

pub fn hausdorff_semidistance<T: Real>(a: &AttractorSample<T>, b: &AttractorSample<T>, tag: SpaceTag) -> Result<f64> {
    hausdorff_points(&a.points, &b.points, tag)
}

/// Largest pairwise distance within a cloud.
pub fn cloud_diameter<T: Real>(points: &[SpectralField<T>], tag: SpaceTag) -> Result<f64> {
    let mut d = 0.0f64;
    for (i, x) in points.iter().enumerate() {
        for y in &points[i + 1..] {
            d = d.max(distance(x, y, tag)?);
        }
    }
    Ok(d)
}

pub fn write_sample<T: Real>(w: &mut impl Write, s: &AttractorSample<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_f64(w, s.pullback_time)?;
    put_u64(w, s.seed)?;
    put_u32(w, s.ensemble_size as u32)?;
    put_u32(w, s.space_tag.weight() as u32)?;
    put_u32(w, s.diverged as u32)?;
    put_u32(w, s.points.len() as u32)?;
    for p in &s.points {
        write_field(w, p)?;
    }
    Ok(())
}

pub fn read_sample<T: Real>(r: &mut impl Read, basis: &Arc<Basis<T>>) -> Result<AttractorSample<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ScbfError::Checkpoint("not a cloud file".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(ScbfError::Checkpoint(format!("unsupported cloud version {version}")));
    }
    let pullback_time = get_f64(r)?;
    let seed = get_u64(r)?;
    let ensemble_size = get_u32(r)? as usize;
    let space_tag = match get_u32(r)? {
        0 => SpaceTag::H,
        1 => SpaceTag::V,
        t => return Err(ScbfError::Checkpoint(format!("unknown space tag {t}"))),
    };
    let diverged = get_u32(r)? as usize;
    let count = get_u32(r)? as usize;
    if count != ensemble_size {
        return Err(ScbfError::Checkpoint(format!("cloud has {count} points but ensemble size {ensemble_size}")));
    }
    let points = (0..count).map(|_| read_field(r, basis)).collect::<Result<Vec<_>>>()?;
    Ok(AttractorSample { points, pullback_time, seed, ensemble_size, space_tag, diverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::testutil::{field, params};
    use crate::spectral::{norm_h, norm_v};

    fn sample(points: Vec<SpectralField<f64>>) -> AttractorSample<f64> {
        let n = points.len();
        AttractorSample { points, pullback_time: -1.0, seed: 3, ensemble_size: n, space_tag: SpaceTag::H, diverged: 0 }
    }

    #[test]
    fn distances_match_norms() {
        let p = params(8, 0.5, 1.0);
        let (a, b) = (field(&p, 1, 1.0), field(&p, 2, 1.5));
        let diff = &a - &b;
        assert!((distance(&a, &b, SpaceTag::H).unwrap() - norm_h(&diff)).abs() < 1e-13);
        assert!((distance(&a, &b, SpaceTag::V).unwrap() - norm_v(&diff)).abs() < 1e-12);
    }

    #[test]
    fn semidistance_examples() {
        let p = params(8, 0.5, 1.0);
        let x = field(&p, 1, 1.0);
        let zero = SpectralField::zeros(p.basis());
        let a = sample(vec![zero.clone(), x.clone()]);
        let b = sample(vec![zero.clone()]);
        assert!((hausdorff_semidistance(&a, &b, SpaceTag::H).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(hausdorff_semidistance(&b, &a, SpaceTag::H).unwrap(), 0.0);
        assert_eq!(hausdorff_semidistance(&a, &a, SpaceTag::V).unwrap(), 0.0);
        assert!(hausdorff_points::<f64>(&[], &b.points, SpaceTag::H).is_err());
        assert!((cloud_diameter(&a.points, SpaceTag::H).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cloud_round_trip() {
        let p = params(4, 0.5, 1.0);
        let mut s = sample(vec![field(&p, 1, 1.0), field(&p, 2, 2.0)]);
        s.diverged = 1;
        s.space_tag = SpaceTag::V;
        let mut buf = Vec::new();
        write_sample(&mut buf, &s).unwrap();
        let back = read_sample(&mut buf.as_slice(), p.basis()).unwrap();
        assert_eq!(back.points, s.points);
        assert_eq!((back.seed, back.ensemble_size, back.diverged, back.space_tag), (3, 2, 1, SpaceTag::V));
        buf[5] = 9;
        assert!(read_sample(&mut buf.as_slice(), p.basis()).is_err());
    }
}
