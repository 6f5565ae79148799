use super::energy::EnergyLedger;
use super::ScbfParams;
use crate::error::{invalid, Result, ScbfError};
use crate::noise::{quanta, NoiseConfig, OuStream};
use crate::scalar::Real;
use crate::spectral::{apply_a, norm_lp, weighted_norm2, SpectralField};

/// Tail weight below which the truncated quadratures are accepted.
const TAIL: f64 = 1e-8;

/// Random radii evaluated along one noise sample on `[-T, 0]`.
///
/// With `g = (8/mu)||z||_V^2`, `h` the source terms of the H energy inequality
/// and `E(s) = exp(int_s^0 (g - mu lambda_1))`:
///
/// * `kappa11(t)^2 = 2 + 2 eps^2 sup_{s<=t} ||z(s)||^2 E_t(s) + int_{-T}^t h(s) E_t(s) ds`
///   bounds `||v(t)||^2` once the initial ball has been forgotten,
/// * `kappa12 = eps ||z(0)||_H`, `kappa13 = kappa11(0) + kappa12` bounds `||u(0)||_H`,
/// * `kappa15^2` bounds `||v(0)||_V^2` by the uniform Gronwall lemma on `[t-1, t]`,
/// * `kappa14` bounds `int_{-1}^0 ||v||_V^2 + ||v + eps z||_{L^{r+1}}^{r+1}`,
/// * `kappa16` bounds `mu int_{-1}^0 ||A v||^2`.
///
/// The V estimate uses `b(w, w, A w) = 0` and `(C(w), A w) >= 0`, both valid
/// on the torus.
#[derive(Clone, Debug)]
pub struct AbsorbingRadius {
    pub kappa11: f64,
    pub kappa12: f64,
    pub kappa13: f64,
    /// `None` when `beta = 0`, since then the damping integral is not controlled.
    pub kappa14: Option<f64>,
    pub kappa15: f64,
    pub kappa16: f64,
    /// Radius of the V-ball containing `u(0)`: `kappa15 + eps ||z(0)||_V`.
    pub v_radius: f64,
    pub young: f64,
    pub embedding: f64,
    pub horizon: f64,
    pub dt: f64,
    rho1: f64,
    /// `ln E(t_n)` on the grid `t_n = -T + n dt`.
    log_weight: Vec<f64>,
    noise_h2: Vec<f64>,
}

impl AbsorbingRadius {
    /// Smallest `tau` such that the ball of radius `rho` is forgotten from every
    /// starting time `s <= -tau`: `rho^2 E(s) e^{2 mu lambda_1} <= 1`. The extra
    /// factor covers the V estimate, which needs absorption from `t = -2` on.
    /// `None` if even `s = -T` is too recent.
    pub fn entry_time(&self, rho: f64) -> Option<f64> {
        let offset = 2.0 * rho.max(1.0).ln() + 2.0 * self.rho1;
        let fail = self.log_weight.iter().position(|&l| offset + l > 0.0);
        match fail {
            None => Some(0.0),
            Some(0) => None,
            Some(n) => Some(self.horizon - (n - 1) as f64 * self.dt),
        }
    }

    /// Pairs `(t, ||z(-t)||^2 E(-t))` for `t` on the grid, the decay profile
    /// behind the tempered-radius property.
    pub fn class_k_profile(&self) -> Vec<(f64, f64)> {
        let n = self.log_weight.len() - 1;
        (0..=n).rev().map(|i| ((n - i) as f64 * self.dt, self.noise_h2[i] * self.log_weight[i].exp())).collect()
    }

    /// `ln E(-t)` for `t` in `[0, T]`, linearly interpolated.
    pub fn log_weight(&self, t: f64) -> f64 {
        let n = self.log_weight.len() - 1;
        let x = (n as f64 - t / self.dt).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(1));
        let frac = x - i as f64;
        if n == 0 {
            return self.log_weight[0];
        }
        self.log_weight[i] * (1.0 - frac) + self.log_weight[i + 1] * frac
    }
}

struct Prefix(Vec<f64>);

impl Prefix {
    /// Cumulative trapezoid sums of `y` with spacing `dt`.
    fn new(y: &[f64], dt: f64) -> Self {
        let mut acc = vec![0.0; y.len()];
        for i in 1..y.len() {
            acc[i] = acc[i - 1] + 0.5 * dt * (y[i - 1] + y[i]);
        }
        Self(acc)
    }

    fn between(&self, a: usize, b: usize) -> f64 {
        self.0[b] - self.0[a]
    }
}

/// Evaluates the radii along the noise sample of `noise` on `[-horizon, 0]`.
pub fn compute_absorbing_radius<T: Real>(
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    horizon: f64,
) -> Result<AbsorbingRadius> {
    params.validate()?;
    let eps = params.epsilon.f64();
    if eps > 0.0 {
        params.check_noise(noise)?;
    }
    let dt = params.dt;
    let steps = quanta(horizon, dt)?;
    let per_unit = quanta(1.0, dt)? as usize;
    if steps < 0 || (steps as usize) < 2 * per_unit {
        return Err(invalid(format!("horizon must be at least 2, got {horizon}")));
    }
    let steps = steps as usize;
    let basis = params.basis();
    let ledger = EnergyLedger::new(params);
    let (mu, beta, r) = (params.mu.f64(), params.beta.f64(), params.r.f64());
    let rho1 = mu * ledger.lambda1;
    let alpha = params.alpha.f64();
    let f_h2 = ledger.forcing_h2;

    // Sample the path and the per-step quantities.
    let window = 2 * per_unit;
    let first_window = steps - window;
    let mut z_h2 = Vec::with_capacity(steps + 1);
    let mut z_v2 = Vec::with_capacity(steps + 1);
    let mut z_a3 = Vec::with_capacity(window + 1);
    let mut az_lr = Vec::with_capacity(window + 1);
    let mut z = SpectralField::zeros(basis);
    let active = eps > 0.0 && noise.amplitude > 0.0;
    let mut stream = if active { Some(OuStream::new(basis, noise, -(steps as f64) * dt, dt)?) } else { None };
    for n in 0..=steps {
        if let Some(s) = &stream {
            s.current_into(&mut z);
        }
        z_h2.push(weighted_norm2(&z, 0).f64());
        z_v2.push(weighted_norm2(&z, 1).f64());
        if n >= first_window {
            z_a3.push(weighted_norm2(&z, 3).f64());
            let lr = if active { norm_lp(&apply_a(&z), r + 1.0)?.f64() } else { 0.0 };
            az_lr.push(lr.powf(r + 1.0));
        }
        if n < steps {
            if let Some(s) = stream.as_mut() {
                s.advance();
            }
        }
    }

    // Forward recurrences for the H radius with piecewise constant g and h.
    let mut log_weight = vec![0.0; steps + 1];
    for n in (0..steps).rev() {
        log_weight[n] = log_weight[n + 1] + (ledger.growth(z_v2[n]) - rho1) * dt;
    }
    if log_weight[0] > TAIL.ln() {
        let rate = -log_weight[0] / horizon;
        let suggested = (rate > 0.0).then(|| 1.25 * (1.0 / TAIL).ln() / rate);
        return Err(ScbfError::NeedsLongerHorizon { horizon, suggested });
    }
    let mut k11_sq = vec![0.0; steps + 1];
    let (mut integral, mut sup) = (0.0, z_h2[0]);
    k11_sq[0] = 2.0 + 2.0 * eps * eps * sup;
    for n in 0..steps {
        let c = ledger.growth(z_v2[n]) - rho1;
        let h = ledger.source(z_v2[n]);
        let growth = (c * dt).exp();
        let gain = if (c * dt).abs() < 1e-12 { dt } else { (c * dt).exp_m1() / c };
        integral = integral * growth + h * gain;
        sup = (sup * growth).max(z_h2[n + 1]);
        k11_sq[n + 1] = 2.0 + 2.0 * eps * eps * sup + integral;
    }
    if !k11_sq.iter().all(|x| x.is_finite()) {
        return Err(ScbfError::InvalidInput("H radius is not finite along this sample".into()));
    }
    let kappa11 = k11_sq[steps].sqrt();
    let kappa12 = eps * z_h2[steps].sqrt();
    let kappa13 = kappa11 + kappa12;

    // Uniform Gronwall on windows [t - 1, t], t in [-1, 0], indexed from first_window.
    let at = |j: usize| first_window + j;
    let rhs_h: Vec<f64> =
        (0..=window).map(|j| ledger.growth(z_v2[at(j)]) * k11_sq[at(j)] + ledger.source(z_v2[at(j)])).collect();
    let (mut s1, mut s2) = (Vec::with_capacity(window + 1), Vec::with_capacity(window + 1));
    for j in 0..=window {
        let i = at(j);
        let rw = k11_sq[i].sqrt() + eps * z_h2[i].sqrt();
        let a3z = z_a3[j].sqrt();
        let a = std::f64::consts::SQRT_2 * eps * rw * a3z;
        s1.push(a);
        s2.push(
            a + 2.0 * std::f64::consts::SQRT_2 * eps * eps * rw * a3z * z_v2[i].sqrt()
                + 2.0 * eps * eps * alpha * alpha * z_h2[i] / mu
                + 2.0 * f_h2 / mu,
        );
    }
    let (p_rhs, p_s1, p_s2, p_az) =
        (Prefix::new(&rhs_h, dt), Prefix::new(&s1, dt), Prefix::new(&s2, dt), Prefix::new(&az_lr, dt));
    let mut y_max: f64 = 0.0;
    let mut last = (0.0, 0.0, 0.0);
    for b in per_unit..=window {
        let a = b - per_unit;
        let w = k11_sq[at(a)] + p_rhs.between(a, b);
        let a1 = p_s1.between(a, b);
        let mut a2 = p_s2.between(a, b);
        if beta > 0.0 && active {
            let damping = (w / beta).powf(r / (r + 1.0));
            a2 += 2.0 * eps * beta * damping * p_az.between(a, b).powf(1.0 / (r + 1.0));
        }
        let y = (w / mu + a2) * a1.exp();
        y_max = y_max.max(y);
        last = (w, a1, a2);
    }
    let (w, a1, a2) = last;
    let kappa15 = ((w / mu + a2) * a1.exp()).sqrt();
    let kappa16 = y_max * (1.0 + a1) + a2;
    let kappa14 = (beta > 0.0).then(|| w / mu.min(beta));
    let v_radius = kappa15 + eps * z_v2[steps].sqrt();

    Ok(AbsorbingRadius {
        kappa11,
        kappa12,
        kappa13,
        kappa14,
        kappa15,
        kappa16,
        v_radius,
        young: ledger.young,
        embedding: ledger.embedding,
        horizon: steps as f64 * dt,
        dt,
        rho1,
        log_weight,
        noise_h2: z_h2,
    })
}
