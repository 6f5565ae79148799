use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, RngExt, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64Mcg;

use super::{quanta, NoiseConfig};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::spectral::{Basis, SpectralField, WaveVector};

/// Standard complex normal, `E|xi|^2 = 1`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Lattice normal attached to `(seed, k, index)`.
fn lattice_normal(seed: u64, k: WaveVector, index: i64) -> Complex<f64> {
    let wave = ((k.k1 as u32 as u64) << 32) | k.k2 as u32 as u64;
    let key = mix(mix(mix(seed ^ 0x6a09_e667_f3bc_c909) ^ wave) ^ index as u64);
    standard_complex_normal(&mut Pcg64Mcg::seed_from_u64(key))
}

fn step_normal(seed: u64, k: WaveVector, first: i64, m: i64) -> Complex<f64> {
    if m == 1 {
        return lattice_normal(seed, k, first);
    }
    let sum = (first..first + m).fold(Complex::new(0.0, 0.0), |acc, j| acc + lattice_normal(seed, k, j));
    sum / (m as f64).sqrt()
}

/// Exact one-step coefficients of a mode: `z' = decay z + gain xi`.
fn step_coefficients(config: &NoiseConfig, lambda: f64, dt: f64) -> (f64, f64) {
    let a = config.rate(lambda);
    let decay = (-a * dt).exp();
    let gain = config.sigma(lambda) * (-(-2.0 * a * dt).exp_m1() / (2.0 * a)).sqrt();
    (decay, gain)
}

/// Draws `z` from the stationary law: each upper-half amplitude is complex
/// Gaussian with `E|c|^2 = sigma_k^2 / (2 (mu lambda_k + alpha))`.
pub fn sample_stationary_initial<T: Real, R: Rng + ?Sized>(
    basis: &Arc<Basis<T>>,
    config: &NoiseConfig,
    rng: &mut R,
) -> Result<SpectralField<T>> {
    config.validate()?;
    Ok(SpectralField::from_amplitudes(basis, |w| {
        let sd = config.stationary_variance(w.norm2() as f64).sqrt();
        let xi = standard_complex_normal(rng) * sd;
        Complex::new(T::of(xi.re), T::of(xi.im))
    }))
}

/// One exact OU step of size `dt` with fresh normals from `rng`.
pub fn ou_step<T: Real, R: Rng + ?Sized>(
    z: &SpectralField<T>,
    dt: f64,
    config: &NoiseConfig,
    rng: &mut R,
) -> Result<SpectralField<T>> {
    config.validate()?;
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let basis = z.basis().clone();
    let mut out = z.clone();
    for &i in basis.spectrum().upper() {
        let (decay, gain) = step_coefficients(config, basis.spectrum().eigenvalue(i) as f64, dt);
        let c = z.mode_amplitude(i);
        let c = Complex::new(c.re.f64(), c.im.f64()) * decay + standard_complex_normal(rng) * gain;
        out.set_mode_amplitude(i, Complex::new(T::of(c.re), T::of(c.im)));
    }
    Ok(out)
}

struct ModeState {
    index: usize,
    wave: WaveVector,
    decay: f64,
    gain: f64,
    /// `sigma_k sqrt(dt)`, the scale of the Wiener increment over one step.
    increment: f64,
    value: Complex<f64>,
}

/// Lazily generated OU path on the lattice `t_n = n dt`.
///
/// The state at the starting time is the stationary solution expressed through
/// the increments that precede it, `z(t_n) = sum_{j>=1} e^{-a (j-1) dt} gain xi_{n-j}`,
/// truncated once the weights drop below `1e-17`. Every stream of one sample
/// therefore traces the same two-sided path, whatever its starting time.
pub struct OuStream<T: Real> {
    basis: Arc<Basis<T>>,
    config: NoiseConfig,
    dt: f64,
    per_step: i64,
    step: i64,
    modes: Vec<ModeState>,
}

const TAIL_LOG: f64 = 39.2; // -ln(1e-17)

impl<T: Real> OuStream<T> {
    pub fn new(basis: &Arc<Basis<T>>, config: &NoiseConfig, t0: f64, dt: f64) -> Result<Self> {
        config.validate()?;
        if !(dt > 0.0) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        let per_step = config.quanta_per_step(dt)?;
        let step = quanta(t0, dt)?;
        let active = config.amplitude > 0.0;
        let mut s = Self { basis: basis.clone(), config: config.clone(), dt, per_step, step, modes: Vec::new() };
        for &i in basis.spectrum().upper() {
            let wave = basis.spectrum().mode(i);
            let lambda = wave.norm2() as f64;
            let (decay, gain) = step_coefficients(config, lambda, dt);
            let increment = config.sigma(lambda) * dt.sqrt();
            let mut value = Complex::new(0.0, 0.0);
            if active {
                let terms = 1 + (TAIL_LOG / (config.rate(lambda) * dt)).ceil() as i64;
                let mut weight = gain;
                for j in 1..=terms {
                    value += s.normal(wave, step - j) * weight;
                    weight *= decay;
                }
            }
            s.modes.push(ModeState { index: i, wave, decay, gain, increment, value });
        }
        Ok(s)
    }

    fn normal(&self, wave: WaveVector, step: i64) -> Complex<f64> {
        step_normal(self.config.seed, wave, step * self.per_step + self.config.shift, self.per_step)
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn step_index(&self) -> i64 {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &NoiseConfig {
        &self.config
    }

    pub fn basis(&self) -> &Arc<Basis<T>> {
        &self.basis
    }

    /// Writes the current `z(t)` into `out`.
    pub fn current_into(&self, out: &mut SpectralField<T>) {
        for m in &self.modes {
            out.set_mode_amplitude(m.index, Complex::new(T::of(m.value.re), T::of(m.value.im)));
        }
    }

    pub fn current(&self) -> SpectralField<T> {
        let mut out = SpectralField::zeros(&self.basis);
        self.current_into(&mut out);
        out
    }

    /// Advances by one step.
    pub fn advance(&mut self) {
        self.advance_inner(None);
    }

    /// Advances by one step and writes the Wiener increment `W(t+dt) - W(t)`
    /// driven by the same normals into `dw`.
    pub fn advance_with_increment(&mut self, dw: &mut SpectralField<T>) {
        self.advance_inner(Some(dw));
    }

    fn advance_inner(&mut self, mut dw: Option<&mut SpectralField<T>>) {
        let active = self.config.amplitude > 0.0;
        let (seed, per_step, shift, step) = (self.config.seed, self.per_step, self.config.shift, self.step);
        for m in &mut self.modes {
            let xi = if active { step_normal(seed, m.wave, step * per_step + shift, per_step) } else { Complex::new(0.0, 0.0) };
            m.value = m.value * m.decay + xi * m.gain;
            if let Some(dw) = dw.as_deref_mut() {
                let inc = xi * m.increment;
                dw.set_mode_amplitude(m.index, Complex::new(T::of(inc.re), T::of(inc.im)));
            }
        }
        self.step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::norm_h2;

    fn basis() -> Arc<Basis<f64>> {
        Basis::new(4).unwrap()
    }

    #[test]
    fn streams_agree_regardless_of_start() {
        let b = basis();
        let c = NoiseConfig::new(0.5, 0.5, 1.0, 42);
        let mut early = OuStream::new(&b, &c, -2.0, 1e-3).unwrap();
        for _ in 0..2000 {
            early.advance();
        }
        let late = OuStream::new(&b, &c, 0.0, 1e-3).unwrap();
        assert_eq!(early.time(), 0.0);
        let d = &early.current() - &late.current();
        assert!(d.max_abs() < 1e-14 * late.current().max_abs().max(1.0));
    }

    #[test]
    fn shift_reproduces_later_path() {
        let b = basis();
        let c = NoiseConfig::new(0.5, 0.5, 1.0, 7);
        let mut plain = OuStream::new(&b, &c, 1.0, 1e-3).unwrap();
        let mut shifted = OuStream::new(&b, &c.shifted(1.0).unwrap(), 0.0, 1e-3).unwrap();
        for _ in 0..50 {
            assert_eq!(plain.current(), shifted.current());
            plain.advance();
            shifted.advance();
        }
    }

    #[test]
    fn refinement_uses_same_brownian_path() {
        // the sum of the fine increments equals the coarse increment
        let b = basis();
        let mut c = NoiseConfig::new(1.0, 0.0, 1.0, 3);
        c.quantum = 2.5e-4;
        let mut coarse = OuStream::new(&b, &c, 0.0, 1e-3).unwrap();
        let mut fine = OuStream::new(&b, &c, 0.0, 5e-4).unwrap();
        let mut dw = SpectralField::zeros(&b);
        let mut acc = SpectralField::zeros(&b);
        coarse.advance_with_increment(&mut dw);
        for _ in 0..2 {
            let mut d = SpectralField::zeros(&b);
            fine.advance_with_increment(&mut d);
            acc += &d;
        }
        assert!((&acc - &dw).max_abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let b = basis();
        let mut s = OuStream::new(&b, &NoiseConfig::new(0.0, 0.0, 1.0, 1), -1.0, 1e-2).unwrap();
        s.advance();
        assert_eq!(norm_h2(&s.current()), 0.0);
    }

    #[test]
    fn rejects_off_lattice_times() {
        let b = basis();
        let c = NoiseConfig::new(1.0, 0.0, 1.0, 1);
        assert!(OuStream::new(&b, &c, 0.0005, 1e-3).is_err());
        assert!(OuStream::new(&b, &c, 0.0, 1.5e-3).is_err());
        assert!(OuStream::new(&b, &c, 0.0, -1e-3).is_err());
    }
}
