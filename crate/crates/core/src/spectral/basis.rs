use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Integer wavevector `k = (k1, k2)` of a Fourier mode `e^{i k.x}` on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector {
    pub k1: i32,
    pub k2: i32,
}

impl WaveVector {
    pub const fn new(k1: i32, k2: i32) -> Self {
        Self { k1, k2 }
    }

    /// `|k|^2`, which is also the Stokes eigenvalue of the mode.
    pub fn norm2(self) -> u32 {
        (self.k1 * self.k1 + self.k2 * self.k2) as u32
    }

    pub fn neg(self) -> Self {
        Self::new(-self.k1, -self.k2)
    }

    /// Representative half of each `{k, -k}` pair: `k1 > 0`, or `k1 == 0` and `k2 > 0`.
    pub fn is_upper(self) -> bool {
        self.k1 > 0 || (self.k1 == 0 && self.k2 > 0)
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k1, self.k2)
    }
}

/// Retained modes `0 < |k| <= K_max`, sorted by eigenvalue with ties broken
/// lexicographically on `(k1, k2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StokesSpectrum {
    k_max: u32,
    modes: Vec<WaveVector>,
    conj: Vec<usize>,
    upper: Vec<usize>,
    lookup: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

/// Largest cutoff accepted; beyond this the dense grids stop fitting in memory.
pub const MAX_K: u32 = 256;

pub fn build_basis(k_max: u32) -> Result<StokesSpectrum> {
    if k_max == 0 {
        return Err(invalid("K_max must be at least 1"));
    }
    if k_max > MAX_K {
        return Err(invalid(format!("K_max = {k_max} exceeds the supported maximum {MAX_K}")));
    }
    let k = k_max as i32;
    let mut modes = Vec::new();
    for k1 in -k..=k {
        for k2 in -k..=k {
            let w = WaveVector::new(k1, k2);
            let n2 = w.norm2();
            if n2 > 0 && n2 <= k_max * k_max {
                modes.push(w);
            }
        }
    }
    modes.sort_by_key(|w| (w.norm2(), w.k1, w.k2));

    let side = (2 * k + 1) as usize;
    let mut lookup = vec![ABSENT; side * side];
    for (i, w) in modes.iter().enumerate() {
        lookup[(w.k1 + k) as usize * side + (w.k2 + k) as usize] = i as u32;
    }
    let at = |w: WaveVector| lookup[(w.k1 + k) as usize * side + (w.k2 + k) as usize] as usize;
    let conj = modes.iter().map(|w| at(w.neg())).collect();
    let upper = (0..modes.len()).filter(|&i| modes[i].is_upper()).collect();
    Ok(StokesSpectrum { k_max, modes, conj, upper, lookup })
}

impl StokesSpectrum {
    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> WaveVector {
        self.modes[i]
    }

    /// Eigenvalue `lambda_i = |k_i|^2` of the i-th mode (0-based).
    pub fn eigenvalue(&self, i: usize) -> u32 {
        self.modes[i].norm2()
    }

    /// Index of `-k` for the mode at index `i`.
    pub fn conj_index(&self, i: usize) -> usize {
        self.conj[i]
    }

    /// Indices of the representative (upper half-plane) mode of every pair.
    pub fn upper(&self) -> &[usize] {
        &self.upper
    }

    pub fn index_of(&self, w: WaveVector) -> Option<usize> {
        let k = self.k_max as i32;
        if w.k1.abs() > k || w.k2.abs() > k {
            return None;
        }
        let side = (2 * k + 1) as usize;
        match self.lookup[(w.k1 + k) as usize * side + (w.k2 + k) as usize] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    /// Indices `m` (number of retained modes) at which the eigenvalue changes,
    /// i.e. `lambda_m < lambda_{m+1}` in 1-based numbering.
    pub fn shell_boundaries(&self) -> Vec<usize> {
        (1..self.modes.len())
            .filter(|&m| self.eigenvalue(m) > self.eigenvalue(m - 1))
            .collect()
    }
}

/// Collocation grid size: smallest power of two with `N >= 3 K_max + 1`, so that
/// quadratic products of retained modes do not alias back onto retained modes.
pub fn collocation_size(k_max: u32) -> usize {
    (3 * k_max as usize + 1).next_power_of_two()
}

pub(crate) struct Plan<T: Real> {
    pub n: usize,
    pub forward: Arc<dyn Fft<T>>,
    pub inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Plan<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn scratch_len(&self) -> usize {
        self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())
    }
}

/// Spectrum plus the precomputed per-mode data and FFT plans shared by all
/// fields of one truncation.
pub struct Basis<T: Real> {
    spectrum: StokesSpectrum,
    pub(crate) lambda: Vec<T>,
    pub(crate) kvec: Vec<[T; 2]>,
    /// `k_perp / |k| = (-k2, k1) / |k|`, the divergence-free direction of a mode.
    pub(crate) perp: Vec<[T; 2]>,
    pub(crate) grid: Plan<T>,
    pub(crate) fine: Plan<T>,
}

impl<T: Real> fmt::Debug for Basis<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("k_max", &self.spectrum.k_max)
            .field("modes", &self.spectrum.len())
            .field("grid", &self.grid.n)
            .field("fine_grid", &self.fine.n)
            .finish()
    }
}

impl<T: Real> Basis<T> {
    pub fn new(k_max: u32) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::from_spectrum(build_basis(k_max)?)))
    }

    pub fn from_spectrum(spectrum: StokesSpectrum) -> Self {
        let modes = spectrum.modes();
        let lambda = modes.iter().map(|w| T::of(w.norm2() as f64)).collect();
        let kvec = modes.iter().map(|w| [T::of(w.k1 as f64), T::of(w.k2 as f64)]).collect();
        let perp = modes
            .iter()
            .map(|w| {
                let n = (w.norm2() as f64).sqrt();
                [T::of(-w.k2 as f64 / n), T::of(w.k1 as f64 / n)]
            })
            .collect();
        let n = collocation_size(spectrum.k_max());
        Self { spectrum, lambda, kvec, perp, grid: Plan::new(n), fine: Plan::new(2 * n) }
    }

    pub fn spectrum(&self) -> &StokesSpectrum {
        &self.spectrum
    }

    pub fn k_max(&self) -> u32 {
        self.spectrum.k_max
    }

    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }

    pub fn lambda(&self, i: usize) -> T {
        self.lambda[i]
    }

    /// Smallest Stokes eigenvalue; equal to 1 on the `2 pi`-periodic torus.
    pub fn lambda1(&self) -> T {
        T::one()
    }

    /// Collocation grid size used for the convective term.
    pub fn grid_size(&self) -> usize {
        self.grid.n
    }

    /// Refined grid size used for the damping term.
    pub fn fine_grid_size(&self) -> usize {
        self.fine.n
    }

    /// Unit divergence-free direction of mode `i`.
    pub fn direction(&self, i: usize) -> [T; 2] {
        self.perp[i]
    }

    pub(crate) fn zero_coeffs(&self) -> Vec<[Complex<T>; 2]> {
        vec![[Complex::default(); 2]; self.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_cutoff() {
        assert!(build_basis(0).is_err());
    }

    #[test]
    fn k1_has_four_modes() {
        let s = build_basis(1).unwrap();
        let m: Vec<_> = s.modes().iter().map(|w| (w.k1, w.k2)).collect();
        assert_eq!(m, vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
        assert_eq!(s.upper(), &[2, 3]);
    }

    #[test]
    fn conjugates_are_involutive() {
        let s = build_basis(7).unwrap();
        for i in 0..s.len() {
            let j = s.conj_index(i);
            assert_eq!(s.mode(j), s.mode(i).neg());
            assert_eq!(s.conj_index(j), i);
            assert_eq!(s.index_of(s.mode(i)), Some(i));
        }
        assert_eq!(s.upper().len() * 2, s.len());
        assert_eq!(s.index_of(WaveVector::new(0, 0)), None);
        assert_eq!(s.index_of(WaveVector::new(7, 7)), None);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(collocation_size(16), 64);
        assert_eq!(collocation_size(8), 32);
        assert_eq!(collocation_size(4), 16);
        let b = Basis::<f64>::new(8).unwrap();
        assert_eq!(b.fine_grid_size(), 64);
    }
}
