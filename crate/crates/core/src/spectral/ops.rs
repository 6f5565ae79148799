use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use super::basis::Basis;
use super::field::SpectralField;
use super::transform::{store, Packed};
use crate::error::{invalid, Result};
use crate::scalar::Real;

fn area<T: Real>() -> T {
    let two_pi = T::TAU();
    two_pi * two_pi
}

/// Removes the gradient part of every coefficient: `u - k (k.u) / |k|^2`.
pub fn leray_project<T: Real>(u: &SpectralField<T>) -> SpectralField<T> {
    let mut out = u.clone();
    leray_in_place(&mut out);
    out
}

pub(crate) fn leray_in_place<T: Real>(u: &mut SpectralField<T>) {
    let basis = u.basis().clone();
    for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
        let [k1, k2] = basis.kvec[i];
        let lam = basis.lambda[i];
        let dot = (c[0] * k1 + c[1] * k2) / lam;
        c[0] = c[0] - dot * k1;
        c[1] = c[1] - dot * k2;
    }
}

/// Divergence residual `max_k |k . u_hat(k)|`.
pub fn divergence_residual<T: Real>(u: &SpectralField<T>) -> T {
    let basis = u.basis();
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| (c[0] * basis.kvec[i][0] + c[1] * basis.kvec[i][1]).norm())
        .fold(T::zero(), T::max)
}

/// Stokes operator: multiplies mode `k` by `|k|^2`.
pub fn apply_a<T: Real>(u: &SpectralField<T>) -> SpectralField<T> {
    apply_a_power(u, T::one())
}

/// `A^s u` for real `s`.
pub fn apply_a_power<T: Real>(u: &SpectralField<T>, s: T) -> SpectralField<T> {
    let mut out = u.clone();
    let basis = u.basis().clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let f = basis.lambda[i].powf(s);
        c[0] = c[0] * f;
        c[1] = c[1] * f;
    }
    out
}

/// `(2 pi)^2 sum_k lambda_k^s |u_hat(k)|^2`, i.e. `||A^{s/2} u||_H^2`.
pub fn weighted_norm2<T: Real>(u: &SpectralField<T>, s: i32) -> T {
    let basis = u.basis();
    let sum = u
        .coeffs()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, c)| acc + basis.lambda[i].powi(s) * (c[0].norm_sqr() + c[1].norm_sqr()));
    area::<T>() * sum
}

pub fn norm_h2<T: Real>(u: &SpectralField<T>) -> T {
    weighted_norm2(u, 0)
}

pub fn norm_v2<T: Real>(u: &SpectralField<T>) -> T {
    weighted_norm2(u, 1)
}

pub fn norm_h<T: Real>(u: &SpectralField<T>) -> T {
    norm_h2(u).sqrt()
}

pub fn norm_v<T: Real>(u: &SpectralField<T>) -> T {
    norm_v2(u).sqrt()
}

/// `||A u||_H`
pub fn norm_a<T: Real>(u: &SpectralField<T>) -> T {
    weighted_norm2(u, 2).sqrt()
}

/// L2 inner product `(u, v)` over the torus.
pub fn inner_h<T: Real>(u: &SpectralField<T>, v: &SpectralField<T>) -> Result<T> {
    u.check_shape(v)?;
    let sum = u
        .coeffs()
        .iter()
        .zip(v.coeffs())
        .fold(T::zero(), |acc, (a, b)| acc + (a[0] * b[0].conj() + a[1] * b[1].conj()).re);
    Ok(area::<T>() * sum)
}

/// Dual norm `||g||_{V'} = ||A^{-1/2} g||_H` for a field expressed on the retained modes.
pub fn norm_v_dual<T: Real>(g: &SpectralField<T>) -> T {
    weighted_norm2(g, -1).sqrt()
}

/// `||u||_{L^p}` by trapezoidal quadrature. The grid has more than `p K_max`
/// points per axis, which makes it exact for even integer `p`.
pub fn norm_lp<T: Real>(u: &SpectralField<T>, p: f64) -> Result<T> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid(format!("L^p norm needs finite p >= 1, got {p}")));
    }
    let k = u.k_max() as usize;
    let n = ((p.ceil() as usize) * k + 1).max(2 * k + 1).next_power_of_two();
    Ok(lp_on_grid(u, p, n))
}

pub(crate) fn lp_on_grid<T: Real>(u: &SpectralField<T>, p: f64, n: usize) -> T {
    let phys = super::transform::to_physical(u, n);
    let half_p = T::of(p / 2.0);
    let sum = phys
        .u1
        .iter()
        .zip(&phys.u2)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a * a + b * b).powf(half_p));
    (area::<T>() * sum / T::of((n * n) as f64)).powf(T::of(1.0 / p))
}

/// Reusable transform buffers for the nonlinear terms. Each trajectory (or
/// each call of the free functions) owns one, so nothing is shared between threads.
pub struct Workspace<T: Real> {
    basis: Arc<Basis<T>>,
    a: Vec<Complex<T>>,
    b: Vec<Complex<T>>,
    c: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Workspace<T> {
    pub fn new(basis: &Arc<Basis<T>>) -> Self {
        Self { basis: basis.clone(), a: Vec::new(), b: Vec::new(), c: Vec::new(), scratch: Vec::new() }
    }

    pub fn basis(&self) -> &Arc<Basis<T>> {
        &self.basis
    }

    /// `(u . grad) v` on the retained modes, optionally Leray-projected.
    /// Products are formed on the dealiased collocation grid.
    pub fn convective(&mut self, u: &SpectralField<T>, v: &SpectralField<T>, project: bool, out: &mut SpectralField<T>) {
        let basis = self.basis.clone();
        let plan = &basis.grid;
        let i_unit = Complex::new(T::zero(), T::one());
        let (cu, cv) = (u.coeffs(), v.coeffs());

        let mut pa = Packed { plan, buf: &mut self.a };
        pa.scatter(&basis, |i| (cu[i][0], cu[i][1]));
        pa.to_grid(&basis, &mut self.scratch);
        let mut pb = Packed { plan, buf: &mut self.b };
        pb.scatter(&basis, |i| {
            let ik = i_unit * basis.kvec[i][0];
            (ik * cv[i][0], ik * cv[i][1])
        });
        pb.to_grid(&basis, &mut self.scratch);
        let mut pc = Packed { plan, buf: &mut self.c };
        pc.scatter(&basis, |i| {
            let ik = i_unit * basis.kvec[i][1];
            (ik * cv[i][0], ik * cv[i][1])
        });
        pc.to_grid(&basis, &mut self.scratch);

        for ((a, b), c) in self.a.iter_mut().zip(&self.b).zip(&self.c) {
            let (u1, u2) = (a.re, a.im);
            *a = Complex::new(u1 * b.re + u2 * c.re, u1 * b.im + u2 * c.im);
        }
        let coeffs = out.coeffs_mut();
        let mut pa = Packed { plan, buf: &mut self.a };
        pa.gather(&basis, &mut self.scratch, |i, x, y| store(&basis, coeffs, i, x, y));
        if project {
            leray_in_place(out);
        }
    }

    /// `P_H(|u|^{r-1} u)` evaluated on the refined grid. Returns the quadrature
    /// value of `||u||_{L^{r+1}}^{r+1}` as a by-product.
    pub fn damping(&mut self, u: &SpectralField<T>, r: T, out: &mut SpectralField<T>) -> T {
        let basis = self.basis.clone();
        if r == T::one() {
            out.coeffs_mut().copy_from_slice(u.coeffs());
            return norm_h2(u);
        }
        let plan = &basis.fine;
        let cu = u.coeffs();
        let mut pa = Packed { plan, buf: &mut self.a };
        pa.scatter(&basis, |i| (cu[i][0], cu[i][1]));
        pa.to_grid(&basis, &mut self.scratch);

        let half_pow = (r - T::one()) / T::of(2.0);
        let int_pow = if half_pow.fract() == T::zero() { half_pow.to_i32() } else { None };
        let mut total = T::zero();
        for z in self.a.iter_mut() {
            let s = z.re * z.re + z.im * z.im;
            let f = match int_pow {
                Some(p) => s.powi(p),
                None => s.powf(half_pow),
            };
            total += f * s;
            *z = *z * f;
        }
        let coeffs = out.coeffs_mut();
        let mut pa = Packed { plan, buf: &mut self.a };
        pa.gather(&basis, &mut self.scratch, |i, x, y| store(&basis, coeffs, i, x, y));
        leray_in_place(out);
        area::<T>() * total / T::of((plan.n * plan.n) as f64)
    }
}

/// Convective term `B(u, v) = P_H (u . grad) v`.
pub fn convective_term<T: Real>(u: &SpectralField<T>, v: &SpectralField<T>) -> Result<SpectralField<T>> {
    u.check_shape(v)?;
    let mut out = SpectralField::zeros(u.basis());
    Workspace::new(u.basis()).convective(u, v, true, &mut out);
    Ok(out)
}

/// Trilinear form `b(u, v, w) = ((u . grad) v, w)`.
pub fn trilinear<T: Real>(u: &SpectralField<T>, v: &SpectralField<T>, w: &SpectralField<T>) -> Result<T> {
    u.check_shape(v)?;
    u.check_shape(w)?;
    let mut g = SpectralField::zeros(u.basis());
    Workspace::new(u.basis()).convective(u, v, false, &mut g);
    inner_h(&g, w)
}

/// Damping term `C(u) = P_H(|u|^{r-1} u)`.
pub fn damping_term<T: Real>(u: &SpectralField<T>, r: T) -> Result<SpectralField<T>> {
    if !(r >= T::one()) {
        return Err(invalid(format!("damping exponent r = {r} must be at least 1")));
    }
    let mut out = SpectralField::zeros(u.basis());
    Workspace::new(u.basis()).damping(u, r, &mut out);
    Ok(out)
}

/// Splits `u` over the real eigenbasis. The mode at spectrum position `i`
/// stands for `cos(k.x) k_perp/|k|` when `k` is in the upper half-plane and for
/// `sin(k.x) k_perp/|k|` otherwise, so the first `m` positions span a real
/// subspace and the split stays Hermitian.
fn split<T: Real>(u: &SpectralField<T>, m: usize) -> Result<(SpectralField<T>, SpectralField<T>)> {
    let n = u.basis().len();
    if m > n {
        return Err(invalid(format!("projection rank {m} exceeds the {n} retained modes")));
    }
    let basis = u.basis().clone();
    let s = basis.spectrum();
    let mut low = SpectralField::zeros(&basis);
    let mut high = SpectralField::zeros(&basis);
    for &i in s.upper() {
        let j = s.conj_index(i);
        let c = u.coeffs()[i];
        let re = c.map(|z| Complex::new(z.re, T::zero()));
        let im = c.map(|z| Complex::new(T::zero(), z.im));
        let (mut lo, mut hi) = ([Complex::default(); 2], [Complex::default(); 2]);
        for (part, kept) in [(re, i < m), (im, j < m)] {
            let target = if kept { &mut lo } else { &mut hi };
            target[0] += part[0];
            target[1] += part[1];
        }
        store(&basis, low.coeffs_mut(), i, lo[0], lo[1]);
        store(&basis, high.coeffs_mut(), i, hi[0], hi[1]);
    }
    Ok((low, high))
}

/// `P_m u`: component of `u` on the first `m` eigenfunctions.
pub fn project_pm<T: Real>(u: &SpectralField<T>, m: usize) -> Result<SpectralField<T>> {
    split(u, m).map(|(p, _)| p)
}

/// `Q_m u = u - P_m u`.
pub fn project_qm<T: Real>(u: &SpectralField<T>, m: usize) -> Result<SpectralField<T>> {
    split(u, m).map(|(_, q)| q)
}

/// Random divergence-free field: each upper-half mode gets a complex Gaussian
/// amplitude with variance `envelope(|k|^2)`.
pub fn random_field<T: Real, R: Rng + ?Sized>(
    basis: &Arc<Basis<T>>,
    rng: &mut R,
    envelope: impl Fn(u32) -> f64,
) -> SpectralField<T> {
    SpectralField::from_amplitudes(basis, |w| {
        let sd = (envelope(w.norm2()) / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::of(sd * re), T::of(sd * im))
    })
}
