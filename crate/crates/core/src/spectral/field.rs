use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex;

use super::basis::{Basis, WaveVector};
use crate::error::{Result, ScbfError};
use crate::scalar::Real;

/// Velocity field stored as Fourier coefficients `u_hat(k)` (one 2-vector per
/// retained mode) in spectrum order. Fields are real, so `u_hat(-k)` is always
/// the complex conjugate of `u_hat(k)`.
#[derive(Clone)]
pub struct SpectralField<T: Real> {
    basis: Arc<Basis<T>>,
    coeffs: Vec<[Complex<T>; 2]>,
}

impl<T: Real> fmt::Debug for SpectralField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("k_max", &self.basis.k_max())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<T: Real> PartialEq for SpectralField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.k_max() == other.k_max() && self.coeffs == other.coeffs
    }
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(basis: &Arc<Basis<T>>) -> Self {
        Self { basis: basis.clone(), coeffs: basis.zero_coeffs() }
    }

    /// Wraps raw coefficients. They are taken as given: use
    /// [`leray_project`](super::leray_project) if they may carry a gradient part.
    pub fn from_coeffs(basis: &Arc<Basis<T>>, coeffs: Vec<[Complex<T>; 2]>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(ScbfError::ShapeMismatch(format!(
                "{} coefficients for a spectrum of {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { basis: basis.clone(), coeffs })
    }

    /// Builds the divergence-free field `sum_k c(k) k_perp/|k| e^{i k.x}` from
    /// amplitudes given on the upper half-plane; the other half follows by symmetry.
    pub fn from_amplitudes(basis: &Arc<Basis<T>>, mut amp: impl FnMut(WaveVector) -> Complex<T>) -> Self {
        let mut out = Self::zeros(basis);
        let s = basis.spectrum();
        for &i in s.upper() {
            let c = amp(s.mode(i));
            out.set_mode_amplitude(i, c);
        }
        out
    }

    /// Sets mode `i` (and its conjugate) to `c k_perp/|k|`.
    pub fn set_mode_amplitude(&mut self, i: usize, c: Complex<T>) {
        let s = self.basis.spectrum();
        let j = s.conj_index(i);
        let e = self.basis.perp[i];
        self.coeffs[i] = [c * e[0], c * e[1]];
        self.coeffs[j] = [self.coeffs[i][0].conj(), self.coeffs[i][1].conj()];
    }

    /// Scalar amplitude along `k_perp/|k|` of mode `i`.
    pub fn mode_amplitude(&self, i: usize) -> Complex<T> {
        let e = self.basis.perp[i];
        self.coeffs[i][0] * e[0] + self.coeffs[i][1] * e[1]
    }

    pub fn basis(&self) -> &Arc<Basis<T>> {
        &self.basis
    }

    pub fn k_max(&self) -> u32 {
        self.basis.k_max()
    }

    pub fn coeffs(&self) -> &[[Complex<T>; 2]] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [[Complex<T>; 2]] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<[Complex<T>; 2]> {
        self.coeffs
    }

    pub fn coeff(&self, w: WaveVector) -> Option<[Complex<T>; 2]> {
        self.basis.spectrum().index_of(w).map(|i| self.coeffs[i])
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.k_max() == other.k_max()
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(ScbfError::ShapeMismatch(format!(
                "fields truncated at K_max = {} and K_max = {}",
                self.k_max(),
                other.k_max()
            )))
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &Self) {
        assert!(self.same_shape(x), "axpy on fields of different truncation");
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            c[0] += d[0] * a;
            c[1] += d[1] * a;
        }
    }

    pub fn scale(&mut self, a: T) {
        for c in &mut self.coeffs {
            c[0] = c[0] * a;
            c[1] = c[1] * a;
        }
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> T {
        self.coeffs.iter().flat_map(|c| c.iter()).map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Converts the coefficients to another scalar type.
    pub fn cast<U: Real>(&self, basis: &Arc<Basis<U>>) -> Result<SpectralField<U>> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.map(|z| Complex::new(U::of(z.re.f64()), U::of(z.im.f64()))))
            .collect();
        SpectralField::from_coeffs(basis, coeffs)
    }
}

impl<T: Real> AddAssign<&SpectralField<T>> for SpectralField<T> {
    fn add_assign(&mut self, rhs: &SpectralField<T>) {
        assert!(self.same_shape(rhs), "adding fields of different truncation");
        for (c, d) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            c[0] += d[0];
            c[1] += d[1];
        }
    }
}

impl<T: Real> SubAssign<&SpectralField<T>> for SpectralField<T> {
    fn sub_assign(&mut self, rhs: &SpectralField<T>) {
        assert!(self.same_shape(rhs), "subtracting fields of different truncation");
        for (c, d) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            c[0] -= d[0];
            c[1] -= d[1];
        }
    }
}

impl<T: Real> Add for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn add(self, rhs: Self) -> SpectralField<T> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<T: Real> Sub for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn sub(self, rhs: Self) -> SpectralField<T> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<T: Real> Mul<T> for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn mul(self, a: T) -> SpectralField<T> {
        let mut out = self.clone();
        out.scale(a);
        out
    }
}

impl<T: Real> Neg for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn neg(self) -> SpectralField<T> {
        self * (-T::one())
    }
}

/// Grid values of a real vector field on an `n x n` uniform grid,
/// `x = 2 pi (i, j) / n`, row-major in `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField<T> {
    pub n: usize,
    pub u1: Vec<T>,
    pub u2: Vec<T>,
}
