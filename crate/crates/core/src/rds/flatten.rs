use serde::Serialize;

use super::stats::{linear_fit, LinearFit};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::spectral::{norm_v, project_qm, SpectralField};

/// `||Q_m v||_V`.
pub fn flattening_tail<T: Real>(v: &SpectralField<T>, m: usize) -> Result<f64> {
    Ok(norm_v(&project_qm(v, m)?).f64())
}

/// Largest tail over a cloud for a range of `m`, with the fit of
/// `ln tail` against `lambda_{m+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct FlatteningProfile {
    pub ms: Vec<usize>,
    /// `lambda_{m+1}`, the first eigenvalue removed by `Q_m`.
    pub lambda_next: Vec<f64>,
    pub tails: Vec<f64>,
    pub fit: LinearFit,
    pub nonincreasing: bool,
}

/// Profile over `ms`; defaults to the shell boundaries, so every `Q_m` removes
/// whole eigenspaces.
pub fn flattening_profile<T: Real>(points: &[SpectralField<T>], ms: Option<&[usize]>) -> Result<FlatteningProfile> {
    let first = points.first().ok_or_else(|| invalid("flattening profile of an empty cloud"))?;
    let spec = first.basis().spectrum();
    let ms: Vec<usize> = match ms {
        Some(ms) => ms.to_vec(),
        None => spec.shell_boundaries(),
    };
    if ms.iter().any(|&m| m >= spec.len()) {
        return Err(invalid(format!("flattening index must be below {}", spec.len())));
    }
    let mut tails = Vec::with_capacity(ms.len());
    for &m in &ms {
        let mut worst = 0.0f64;
        for p in points {
            worst = worst.max(flattening_tail(p, m)?);
        }
        tails.push(worst);
    }
    let lambda_next: Vec<f64> = ms.iter().map(|&m| spec.eigenvalue(m) as f64).collect();
    let nonincreasing = tails.windows(2).all(|w| w[1] <= w[0]);
    let (x, y): (Vec<f64>, Vec<f64>) =
        lambda_next.iter().zip(&tails).filter(|(_, t)| **t > 0.0).map(|(l, t)| (*l, t.ln())).unzip();
    let fit = linear_fit(&x, &y)?;
    Ok(FlatteningProfile { ms, lambda_next, tails, fit, nonincreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::testutil::{field, params};
    use crate::spectral::{norm_v2, project_pm};
    use num_complex::Complex;

    #[test]
    fn tails_of_simple_fields() {
        let p = params(8, 0.5, 1.0);
        let u = field(&p, 1, 1.0);
        let m = 12;
        assert_eq!(flattening_tail(&project_pm(&u, m).unwrap(), m).unwrap(), 0.0);
        let mut single = SpectralField::zeros(p.basis());
        single.set_mode_amplitude(40, Complex::new(0.3, 0.1));
        assert!((flattening_tail(&single, 20).unwrap() - norm_v(&single)).abs() < 1e-14);
        let pm = norm_v2(&project_pm(&u, m).unwrap());
        assert!((flattening_tail(&u, m).unwrap().powi(2) + pm - norm_v2(&u)).abs() < 1e-12);
    }

    #[test]
    fn exponential_spectrum_fits_a_line() {
        let p = params(8, 0.5, 1.0);
        let u = SpectralField::from_amplitudes(p.basis(), |w| Complex::new((-(w.norm2() as f64)).exp(), 0.0));
        let prof = flattening_profile(&[u], None).unwrap();
        assert!(prof.nonincreasing);
        assert!(prof.fit.slope < 0.0 && prof.fit.r2 > 0.9, "{:?}", prof.fit);
        assert!(flattening_profile::<f64>(&[], None).is_err());
    }
}
