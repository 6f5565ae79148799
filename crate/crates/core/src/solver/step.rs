use num_complex::Complex;

use super::ScbfParams;
use crate::error::{Result, ScbfError};
use crate::scalar::Real;
use crate::spectral::{SpectralField, Workspace};

/// Exponential Euler integrator with its own transform buffers. One per trajectory.
pub struct Stepper<T: Real> {
    params: ScbfParams<T>,
    decay: Vec<T>,
    ws: Workspace<T>,
    w: SpectralField<T>,
    conv: SpectralField<T>,
    damp: SpectralField<T>,
    dt: T,
}

impl<T: Real> Stepper<T> {
    pub fn new(params: &ScbfParams<T>) -> Result<Self> {
        params.validate()?;
        let basis = params.basis().clone();
        let dt = T::of(params.dt);
        let decay = (0..basis.len()).map(|i| (-params.mu * basis.lambda(i) * dt).exp()).collect();
        Ok(Self {
            params: params.clone(),
            decay,
            ws: Workspace::new(&basis),
            w: SpectralField::zeros(&basis),
            conv: SpectralField::zeros(&basis),
            damp: SpectralField::zeros(&basis),
            dt,
        })
    }

    pub fn params(&self) -> &ScbfParams<T> {
        &self.params
    }

    /// Evaluates `B(w)` and `C(w)` into the internal buffers and returns
    /// `||w||_{L^{r+1}}^{r+1}`.
    fn nonlinear(&mut self) -> T {
        self.ws.convective(&self.w, &self.w, true, &mut self.conv);
        self.ws.damping(&self.w, self.params.r, &mut self.damp)
    }

    /// `v <- e^{-mu A dt}(v + dt N)` with
    /// `N = -B(v + eps z) - beta C(v + eps z) + eps alpha z + f`.
    /// Returns `||v + eps z||_{L^{r+1}}^{r+1}` at the start of the step.
    pub fn advance_v(&mut self, v: &mut SpectralField<T>, z: &SpectralField<T>) -> T {
        let eps = self.params.epsilon;
        self.w.coeffs_mut().copy_from_slice(v.coeffs());
        self.w.axpy(eps, z);
        let lr = self.nonlinear();
        let (beta, ea, dt) = (self.params.beta, eps * self.params.alpha, self.dt);
        let f = self.params.forcing.coeffs();
        let (conv, damp, zc) = (self.conv.coeffs(), self.damp.coeffs(), z.coeffs());
        for (i, c) in v.coeffs_mut().iter_mut().enumerate() {
            for d in 0..2 {
                let n = -conv[i][d] - damp[i][d] * beta + zc[i][d] * ea + f[i][d];
                c[d] = (c[d] + n * dt) * self.decay[i];
            }
        }
        lr
    }

    /// `u <- e^{-mu A dt}(u + dt (-B(u) - beta C(u) + f)) + eps dW`.
    /// Returns `||u||_{L^{r+1}}^{r+1}` at the start of the step.
    pub fn advance_u(&mut self, u: &mut SpectralField<T>, dw: &SpectralField<T>) -> T {
        self.w.coeffs_mut().copy_from_slice(u.coeffs());
        let lr = self.nonlinear();
        let (beta, eps, dt) = (self.params.beta, self.params.epsilon, self.dt);
        let f = self.params.forcing.coeffs();
        let (conv, damp, dwc) = (self.conv.coeffs(), self.damp.coeffs(), dw.coeffs());
        for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
            for d in 0..2 {
                let n = -conv[i][d] - damp[i][d] * beta + f[i][d];
                c[d] = (c[d] + n * dt) * self.decay[i] + dwc[i][d] * eps;
            }
        }
        lr
    }

    /// `||w||_{L^{r+1}}^{r+1}` for an arbitrary field, on the damping grid.
    pub fn lr1_norm(&mut self, u: &SpectralField<T>) -> T {
        self.w.coeffs_mut().copy_from_slice(u.coeffs());
        let r = self.params.r;
        self.ws.damping(&self.w, r, &mut self.damp)
    }
}

fn finite<T: Real>(u: &SpectralField<T>) -> bool {
    u.coeffs().iter().all(|c| c.iter().all(|z: &Complex<T>| z.re.is_finite() && z.im.is_finite()))
}

/// One step of the transformed system from `v_n` with noise value `z_n`.
pub fn step_v<T: Real>(v: &SpectralField<T>, z: &SpectralField<T>, params: &ScbfParams<T>) -> Result<SpectralField<T>> {
    v.check_shape(z)?;
    v.check_shape(&params.forcing)?;
    let mut out = v.clone();
    Stepper::new(params)?.advance_v(&mut out, z);
    if !finite(&out) {
        return Err(ScbfError::Diverged { step: 1, time: params.dt });
    }
    Ok(out)
}

/// One Euler-Maruyama step of the original equation with Wiener increment `dw`.
pub fn step_u_direct<T: Real>(u: &SpectralField<T>, dw: &SpectralField<T>, params: &ScbfParams<T>) -> Result<SpectralField<T>> {
    u.check_shape(dw)?;
    u.check_shape(&params.forcing)?;
    let mut out = u.clone();
    Stepper::new(params)?.advance_u(&mut out, dw);
    if !finite(&out) {
        return Err(ScbfError::Diverged { step: 1, time: params.dt });
    }
    Ok(out)
}

pub(crate) fn is_finite<T: Real>(u: &SpectralField<T>) -> bool {
    finite(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::testutil::{field, params};
    use crate::spectral::{norm_h, norm_h2, Basis};

    #[test]
    fn single_mode_decays_exactly() {
        let mut p = params(8, 0.0, 0.0);
        p.beta = 0.0;
        let i = p.basis().spectrum().index_of(crate::spectral::WaveVector::new(1, 2)).unwrap();
        let mut v = SpectralField::zeros(p.basis());
        v.set_mode_amplitude(i, Complex::new(0.7, -0.2));
        let z = SpectralField::zeros(p.basis());
        let mut s = Stepper::new(&p).unwrap();
        let mut u = v.clone();
        for _ in 0..1000 {
            s.advance_v(&mut u, &z);
        }
        let mut exact = v.clone();
        exact.scale((-5.0f64).exp());
        let err = norm_h(&(&u - &exact)) / norm_h(&exact);
        assert!(err < 1e-12, "relative error {err}");
    }

    #[test]
    fn direct_step_matches_transformed_step_without_noise() {
        let p = params(8, 0.0, 1.0);
        let u = field(&p, 3, 2.0);
        let zero = SpectralField::zeros(p.basis());
        let a = step_v(&u, &zero, &p).unwrap();
        let b = step_u_direct(&u, &zero, &p).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
    }

    #[test]
    fn unforced_energy_is_nonincreasing() {
        let p = params(8, 0.0, 0.0);
        let mut v = field(&p, 4, 5.0);
        let z = SpectralField::zeros(p.basis());
        let mut s = Stepper::new(&p).unwrap();
        let mut prev = norm_h2(&v);
        for _ in 0..500 {
            s.advance_v(&mut v, &z);
            let e = norm_h2(&v);
            assert!(e <= prev, "{e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn first_order_convergence() {
        let base = params(8, 0.0, 1.0);
        let u0 = field(&base, 5, 3.0);
        let run = |dt: f64| {
            let mut p = base.clone();
            p.dt = dt;
            let mut s = Stepper::new(&p).unwrap();
            let z = SpectralField::zeros(p.basis());
            let mut v = u0.clone();
            for _ in 0..(0.5 / dt).round() as usize {
                s.advance_v(&mut v, &z);
            }
            v
        };
        let (a, b, c) = (run(4e-3), run(2e-3), run(1e-3));
        let ratio = norm_h(&(&a - &b)) / norm_h(&(&b - &c));
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn shape_mismatch_and_divergence_are_reported() {
        let p = params(8, 0.0, 1.0);
        let other = SpectralField::<f64>::zeros(&Basis::new(4).unwrap());
        assert!(matches!(step_v(&other, &other, &p), Err(ScbfError::ShapeMismatch(_))));
        let mut u = field(&p, 6, 1.0);
        u.scale(f64::INFINITY);
        assert!(matches!(step_v(&u, &SpectralField::zeros(p.basis()), &p), Err(ScbfError::Diverged { step: 1, .. })));
    }
}
