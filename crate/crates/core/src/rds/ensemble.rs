use rand::{Rng, RngExt, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;
use serde::Serialize;

use super::{PullbackSchedule, SpaceTag};
use crate::error::{invalid, Result, ScbfError};
use crate::noise::NoiseConfig;
use crate::scalar::Real;
use crate::solver::{solve, ScbfParams};
use crate::spectral::{norm_h, random_field, Basis, SpectralField};

/// Terminal states at time 0 of a pullback ensemble started at `pullback_time`.
/// `ensemble_size` counts the surviving points; members whose trajectory
/// blew up are dropped and counted in `diverged`.
#[derive(Clone, Debug, Serialize)]
pub struct AttractorSample<T: Real> {
    #[serde(skip)]
    pub points: Vec<SpectralField<T>>,
    pub pullback_time: f64,
    pub seed: u64,
    pub ensemble_size: usize,
    pub space_tag: SpaceTag,
    pub diverged: usize,
}

/// `count` points uniformly distributed in the H-ball of radius `radius`: an
/// isotropic Gaussian direction scaled by `radius U^{1/d}`.
pub fn uniform_ball<T: Real, R: Rng + ?Sized>(
    basis: &std::sync::Arc<Basis<T>>,
    radius: f64,
    count: usize,
    rng: &mut R,
) -> Vec<SpectralField<T>> {
    let dim = basis.len() as f64;
    (0..count)
        .map(|_| {
            let mut u = random_field(basis, rng, |_| 1.0);
            let n = norm_h(&u).f64();
            let scale = radius * rng.random::<f64>().powf(1.0 / dim) / n;
            u.scale(T::of(scale));
            u
        })
        .collect()
}

/// Evolves one ensemble of initial points, drawn from the H-ball of radius
/// `radius` with `seed`, from every pullback time of the schedule to 0 under
/// the single noise sample `noise`. Members run in parallel.
pub fn attractor_sample<T: Real>(
    schedule: &PullbackSchedule,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    radius: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<Vec<AttractorSample<T>>> {
    if ensemble_size < 2 {
        return Err(invalid(format!("ensemble size must be at least 2, got {ensemble_size}")));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid(format!("ball radius must be finite and >= 0, got {radius}")));
    }
    params.validate()?;
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let initial = uniform_ball(params.basis(), radius, ensemble_size, &mut rng);
    let jobs: Vec<(usize, usize)> =
        (0..schedule.times().len()).flat_map(|j| (0..ensemble_size).map(move |i| (j, i))).collect();
    let results: Vec<Result<SpectralField<T>>> = jobs
        .par_iter()
        .map(|&(j, i)| solve(&initial[i], schedule.times()[j], 0.0, params, noise, false).map(|s| s.u))
        .collect();
    let mut out: Vec<AttractorSample<T>> = schedule
        .times()
        .iter()
        .map(|&s| AttractorSample {
            points: Vec::with_capacity(ensemble_size),
            pullback_time: s,
            seed,
            ensemble_size: 0,
            space_tag: SpaceTag::H,
            diverged: 0,
        })
        .collect();
    for (&(j, _), res) in jobs.iter().zip(results) {
        match res {
            Ok(u) => out[j].points.push(u),
            Err(ScbfError::Diverged { .. }) => out[j].diverged += 1,
            Err(e) => return Err(e),
        }
    }
    for s in &mut out {
        s.ensemble_size = s.points.len();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::testutil::{noise, params};
    use crate::rds::{cloud_diameter, hausdorff_semidistance};

    #[test]
    fn ball_points_lie_inside() {
        let p = params(8, 0.5, 1.0);
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let pts = uniform_ball(p.basis(), 3.0, 50, &mut rng);
        assert!(pts.iter().all(|u| norm_h(u) <= 3.0 + 1e-12));
        assert!(pts.iter().all(|u| crate::spectral::divergence_residual(u) < 1e-14));
    }

    #[test]
    fn unforced_deterministic_clouds_collapse() {
        let p = params(8, 0.0, 0.0);
        let sched = PullbackSchedule::new(vec![-2.0, -20.0]).unwrap();
        let out = attractor_sample(&sched, &p, &noise(&p, 0.0, 1), 5.0, 4, 7).unwrap();
        assert_eq!(out.len(), 2);
        let d2 = cloud_diameter(&out[0].points, SpaceTag::H).unwrap();
        let d20 = cloud_diameter(&out[1].points, SpaceTag::H).unwrap();
        assert!(d20 < 1e-6, "{d20}");
        assert!(d20 <= d2);
        assert!(out.iter().all(|s| s.diverged == 0 && s.ensemble_size == 4));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = params(8, 0.5, 1.0);
        let sched = PullbackSchedule::new(vec![-0.2]).unwrap();
        let nz = noise(&p, 0.1, 3);
        let a = attractor_sample(&sched, &p, &nz, 2.0, 3, 11).unwrap();
        let b = attractor_sample(&sched, &p, &nz, 2.0, 3, 11).unwrap();
        assert_eq!(a[0].points, b[0].points);
        assert_eq!(hausdorff_semidistance(&a[0], &b[0], SpaceTag::H).unwrap(), 0.0);
        assert!(attractor_sample(&sched, &p, &nz, 2.0, 1, 11).is_err());
    }
}
