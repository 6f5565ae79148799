use num_complex::Complex;

use super::basis::{Basis, Plan};
use super::field::{PhysicalField, SpectralField};
use crate::scalar::Real;

fn transpose<T: Copy>(buf: &mut [T], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Runs `fft` over the rows `0..=k` and `n-k..n` of an `n x n` buffer, the
/// only rows that carry retained wavenumbers.
fn band_rows<T: Real>(fft: &dyn rustfft::Fft<T>, buf: &mut [Complex<T>], n: usize, k: usize, scratch: &mut [Complex<T>]) {
    fft.process_with_scratch(&mut buf[..(k + 1) * n], scratch);
    fft.process_with_scratch(&mut buf[(n - k) * n..], scratch);
}

/// Spectral `[k1][k2]` to grid values stored as `[x2][x1]`.
fn inverse2<T: Real>(plan: &Plan<T>, k: usize, buf: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
    let n = plan.n;
    scratch.resize(plan.scratch_len(), Complex::default());
    band_rows(plan.inverse.as_ref(), buf, n, k, scratch);
    transpose(buf, n);
    plan.inverse.process_with_scratch(buf, scratch);
}

/// Grid values stored as `[x2][x1]` to spectral `[k1][k2]`, exact on the rows
/// `|k1| <= k` only.
fn forward2<T: Real>(plan: &Plan<T>, k: usize, buf: &mut [Complex<T>], scratch: &mut Vec<Complex<T>>) {
    let n = plan.n;
    scratch.resize(plan.scratch_len(), Complex::default());
    plan.forward.process_with_scratch(buf, scratch);
    transpose(buf, n);
    band_rows(plan.forward.as_ref(), buf, n, k, scratch);
}

fn position(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}

/// Scatter/gather between spectral coefficients and an `n x n` grid. Two real
/// fields `a`, `b` travel together as `a + i b` in one complex transform.
pub(crate) struct Packed<'a, T: Real> {
    pub plan: &'a Plan<T>,
    pub buf: &'a mut Vec<Complex<T>>,
}

impl<T: Real> Packed<'_, T> {
    /// Fills the grid with `a + i b` where the Fourier coefficients of the real
    /// fields `a`, `b` at retained mode `i` are given by `coef(i)`.
    pub fn scatter(&mut self, basis: &Basis<T>, mut coef: impl FnMut(usize) -> (Complex<T>, Complex<T>)) {
        let n = self.plan.n;
        self.buf.clear();
        self.buf.resize(n * n, Complex::default());
        let i_unit = Complex::new(T::zero(), T::one());
        for (i, w) in basis.spectrum().modes().iter().enumerate() {
            let (a, b) = coef(i);
            self.buf[position(w.k1, n) * n + position(w.k2, n)] = a + i_unit * b;
        }
    }

    /// Inverse transform. The grid comes out transposed, `[x2][x1]`, which is
    /// what `gather` expects back; pointwise work does not care.
    pub fn to_grid(&mut self, basis: &Basis<T>, scratch: &mut Vec<Complex<T>>) {
        inverse2(self.plan, basis.k_max() as usize, self.buf, scratch);
    }

    /// Forward transform of grid values `a + i b`, then writes the retained
    /// coefficients `(a_hat(k), b_hat(k))` through `sink`, upper-half modes only.
    pub fn gather(
        &mut self,
        basis: &Basis<T>,
        scratch: &mut Vec<Complex<T>>,
        mut sink: impl FnMut(usize, Complex<T>, Complex<T>),
    ) {
        forward2(self.plan, basis.k_max() as usize, self.buf, scratch);
        let n = self.plan.n;
        let norm = T::one() / T::of((n * n) as f64);
        let half = T::of(0.5);
        let s = basis.spectrum();
        for &i in s.upper() {
            let w = s.mode(i);
            let zp = self.buf[position(w.k1, n) * n + position(w.k2, n)] * norm;
            let zq = self.buf[position(-w.k1, n) * n + position(-w.k2, n)] * norm;
            let a = (zp + zq.conj()) * half;
            let d = zp - zq.conj();
            // -i d / 2
            let b = Complex::new(d.im * half, -d.re * half);
            sink(i, a, b);
        }
    }
}

/// Writes `(a, b)` into mode `i` of a coefficient vector and mirrors the conjugate.
pub(crate) fn store<T: Real>(basis: &Basis<T>, coeffs: &mut [[Complex<T>; 2]], i: usize, a: Complex<T>, b: Complex<T>) {
    let j = basis.spectrum().conj_index(i);
    coeffs[i] = [a, b];
    coeffs[j] = [a.conj(), b.conj()];
}

/// Grid values of `u` on an `n x n` grid. Requires `n > 2 K_max`.
pub fn to_physical<T: Real>(u: &SpectralField<T>, n: usize) -> PhysicalField<T> {
    let basis = u.basis();
    assert!(n > 2 * basis.k_max() as usize, "grid of {n} points cannot represent K_max = {}", basis.k_max());
    let own;
    let plan = if n == basis.grid.n {
        &basis.grid
    } else if n == basis.fine.n {
        &basis.fine
    } else {
        own = Plan::new(n);
        &own
    };
    let mut buf = Vec::new();
    let mut scratch = Vec::new();
    let mut p = Packed { plan, buf: &mut buf };
    let c = u.coeffs();
    p.scatter(basis, |i| (c[i][0], c[i][1]));
    p.to_grid(basis, &mut scratch);
    transpose(&mut buf, n);
    PhysicalField { n, u1: buf.iter().map(|z| z.re).collect(), u2: buf.iter().map(|z| z.im).collect() }
}

/// Retained Fourier coefficients of grid data. No projection is applied.
pub fn from_physical<T: Real>(phys: &PhysicalField<T>, basis: &std::sync::Arc<Basis<T>>) -> SpectralField<T> {
    let n = phys.n;
    assert!(n > 2 * basis.k_max() as usize, "grid of {n} points cannot represent K_max = {}", basis.k_max());
    let plan = Plan::new(n);
    let mut buf: Vec<Complex<T>> = phys.u1.iter().zip(&phys.u2).map(|(&a, &b)| Complex::new(a, b)).collect();
    transpose(&mut buf, n);
    let mut scratch = Vec::new();
    let mut coeffs = basis.zero_coeffs();
    let mut p = Packed { plan: &plan, buf: &mut buf };
    p.gather(basis, &mut scratch, |i, a, b| store(basis, &mut coeffs, i, a, b));
    SpectralField::from_coeffs(basis, coeffs).expect("coefficient count matches basis")
}
