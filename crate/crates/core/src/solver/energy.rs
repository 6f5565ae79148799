use super::{ScbfParams, TrajectoryRecord};
use crate::error::{Result, ScbfError};
use crate::noise::OuPath;
use crate::scalar::Real;
use crate::spectral::{norm_v2, StokesSpectrum};

/// Constant `c_p` with `||z||_{L^p} <= c_p ||z||_V` for every field of the
/// truncation: `c_p = (sqrt(S) / 2 pi)^{1 - 2/p} lambda_1^{-1/p}` where
/// `S = sum_k |k|^{-2}` over the retained modes. It follows from
/// `||z||_inf <= sum |z_hat| <= sqrt(S) ||z||_V / 2 pi` and interpolation with `L^2`.
pub fn embedding_constant(spectrum: &StokesSpectrum, p: f64) -> f64 {
    let s: f64 = spectrum.modes().iter().map(|w| 1.0 / w.norm2() as f64).sum();
    let lambda1 = spectrum.eigenvalue(0) as f64;
    (s.sqrt() / std::f64::consts::TAU).powf(1.0 - 2.0 / p) * lambda1.powf(-1.0 / p)
}

/// Right-hand side of the H energy inequality
/// `d/dt ||v||^2 + mu lambda_1 ||v||^2 <= (8/mu) ||v||^2 ||z||_V^2 + 8 eps^4/(mu lambda_1^2) ||z||_V^4
///   + C eps^{r+1} ||z||_V^{r+1} + 8 alpha^2 eps^2/(mu lambda_1^4) ||z||_V^2 + 8/(mu lambda_1^2) ||f||^2`.
///
/// The Young step on the damping cross term gives
/// `C = 2 beta (2r)^r / (r+1)^{r+1} c_{r+1}^{r+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLedger {
    pub mu: f64,
    pub lambda1: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub r: f64,
    pub embedding: f64,
    pub young: f64,
    pub forcing_h2: f64,
}

impl EnergyLedger {
    pub fn new<T: Real>(params: &ScbfParams<T>) -> Self {
        let r = params.r.f64();
        let beta = params.beta.f64();
        let embedding = embedding_constant(params.basis().spectrum(), r + 1.0);
        let young = 2.0 * beta * (2.0 * r).powf(r) / (r + 1.0).powf(r + 1.0) * embedding.powf(r + 1.0);
        Self {
            mu: params.mu.f64(),
            lambda1: params.basis().lambda1().f64(),
            epsilon: params.epsilon.f64(),
            alpha: params.alpha.f64(),
            r,
            embedding,
            young,
            forcing_h2: crate::spectral::norm_h2(&params.forcing).f64(),
        }
    }

    /// Coefficient of `||v||^2` in the right-hand side.
    pub fn growth(&self, z_v2: f64) -> f64 {
        8.0 / self.mu * z_v2
    }

    /// Terms of the right-hand side that do not involve `v`.
    pub fn source(&self, z_v2: f64) -> f64 {
        let (mu, l1, e, a) = (self.mu, self.lambda1, self.epsilon, self.alpha);
        8.0 * e.powi(4) / (mu * l1 * l1) * z_v2 * z_v2
            + self.young * e.powf(self.r + 1.0) * z_v2.powf((self.r + 1.0) / 2.0)
            + 8.0 * a * a * e * e / (mu * l1.powi(4)) * z_v2
            + 8.0 / (mu * l1 * l1) * self.forcing_h2
    }

    pub fn rhs(&self, v_h2: f64, z_v2: f64) -> f64 {
        self.growth(z_v2) * v_h2 + self.source(z_v2)
    }

    /// Normalized residual of the forward-difference inequality over one step.
    /// Positive values are violations.
    pub fn residual(&self, v0: f64, v1: f64, z_v2: f64, dt: f64) -> f64 {
        let deriv = (v1 - v0) / dt;
        let decay = self.mu * self.lambda1 * v0;
        let rhs = self.rhs(v0, z_v2);
        let scale = rhs.max(decay).max(deriv.abs()).max(f64::MIN_POSITIVE);
        (deriv + decay - rhs) / scale
    }
}

/// Recomputes the ledger of `record` against the noise path and returns the
/// largest positive residual.
pub fn check_energy_inequality_h<T: Real>(
    record: &TrajectoryRecord,
    z_path: &OuPath<T>,
    params: &ScbfParams<T>,
) -> Result<f64> {
    if record.len() != z_path.values.len() {
        return Err(ScbfError::InvalidInput(format!(
            "record has {} time levels, noise path has {}",
            record.len(),
            z_path.values.len()
        )));
    }
    if record.len() < 2 {
        return Ok(0.0);
    }
    let dt = record.times[1] - record.times[0];
    if (record.times[0] - z_path.t0).abs() > 1e-9 * dt.max(1.0) || (dt - z_path.dt).abs() > 1e-9 * dt {
        return Err(ScbfError::InvalidInput(format!(
            "record starts at {} with step {dt}, noise path at {} with step {}",
            record.times[0], z_path.t0, z_path.dt
        )));
    }
    if z_path.values[0].k_max() != params.k_max() {
        return Err(ScbfError::InvalidInput("noise path and parameters use different truncations".into()));
    }
    let ledger = EnergyLedger::new(params);
    let mut worst = 0.0f64;
    for n in 0..record.len() - 1 {
        let zv = norm_v2(&z_path.values[n]).f64();
        let res = ledger.residual(record.transformed_h2[n], record.transformed_h2[n + 1], zv, dt);
        worst = worst.max(res);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::generate_path;
    use crate::solver::testutil::{field, noise, params};
    use crate::solver::{solve, solve_pullback};
    use crate::spectral::SpectralField;

    #[test]
    fn zero_data_has_nonpositive_ledger() {
        let p = params(8, 0.0, 0.0);
        let u0 = SpectralField::zeros(p.basis());
        let sol = solve(&u0, -0.1, 0.0, &p, &noise(&p, 0.0, 0), true).unwrap();
        assert!(sol.record.ledger.iter().all(|&x| x <= 0.0));
    }

    #[test]
    fn unforced_decay_bound() {
        let p = params(8, 0.0, 0.0);
        let u0 = field(&p, 1, 3.0);
        let sol = solve(&u0, -1.0, 0.0, &p, &noise(&p, 0.0, 0), true).unwrap();
        let rec = &sol.record;
        for (t, e) in rec.times.iter().zip(&rec.h_norm2) {
            let bound = 9.0 * (-(t + 1.0)).exp() * (1.0 + 1e-3);
            assert!(*e <= bound, "t = {t}: {e} > {bound}");
        }
    }

    #[test]
    fn stochastic_ledger_within_slack() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 21);
        let u0 = field(&p, 2, 3.0);
        let sol = solve_pullback(&u0, -1.0, &p, &nz).unwrap();
        let path = generate_path(p.basis(), &nz, -1.0, 0.0, p.dt).unwrap();
        let worst = check_energy_inequality_h(&sol.record, &path, &p).unwrap();
        assert!(worst <= 0.05, "violation {worst}");
        assert!((worst - sol.record.max_violation()).abs() < 1e-9);
    }

    #[test]
    fn mismatched_path_is_rejected() {
        let p = params(8, 0.5, 1.0);
        let nz = noise(&p, 0.1, 3);
        let sol = solve_pullback(&field(&p, 3, 1.0), -0.1, &p, &nz).unwrap();
        let short = generate_path(p.basis(), &nz, -0.05, 0.0, p.dt).unwrap();
        assert!(matches!(check_energy_inequality_h(&sol.record, &short, &p), Err(ScbfError::InvalidInput(_))));
        let shifted = generate_path(p.basis(), &nz, -0.2, -0.1, p.dt).unwrap();
        assert!(matches!(check_energy_inequality_h(&sol.record, &shifted, &p), Err(ScbfError::InvalidInput(_))));
    }

    #[test]
    fn embedding_constant_bounds_sup_norm_interpolation() {
        let p = params(8, 0.5, 1.0);
        let s = p.basis().spectrum();
        for seed in 0..20 {
            let u = field(&p, seed, 1.0);
            for q in [2.0, 4.0, 6.0] {
                let lhs = crate::spectral::norm_lp(&u, q).unwrap();
                let rhs = embedding_constant(s, q) * crate::spectral::norm_v(&u);
                assert!(lhs <= rhs * (1.0 + 1e-12), "p = {q}: {lhs} > {rhs}");
            }
        }
        assert!((embedding_constant(s, 2.0) - 1.0).abs() < 1e-15);
    }
}
