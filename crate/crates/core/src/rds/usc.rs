use serde::Serialize;

use super::cloud::hausdorff_points;
use super::ensemble::attractor_sample;
use super::stats::jackknife_se;
use super::{PullbackSchedule, SpaceTag};
use crate::error::{invalid, Result};
use crate::noise::NoiseConfig;
use crate::scalar::Real;
use crate::solver::ScbfParams;
use crate::spectral::SpectralField;

/// `d(A_eps, A_ref)` in H with its jackknife standard error over the points of `A_eps`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UscPoint {
    pub epsilon: f64,
    pub distance: f64,
    pub std_error: f64,
}

/// Cloud at the deepest pullback time of the schedule for noise intensity `eps`.
fn cloud<T: Real>(
    eps: f64,
    schedule: &PullbackSchedule,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    radius: f64,
    ensemble: usize,
    seed: u64,
) -> Result<Vec<SpectralField<T>>> {
    let mut p = params.clone();
    p.epsilon = T::of(eps);
    let deepest = PullbackSchedule::new(vec![schedule.deepest()])?;
    let mut out = attractor_sample(&deepest, &p, noise, radius, ensemble, seed)?;
    let sample = out.pop().unwrap();
    if sample.points.is_empty() {
        return Err(invalid(format!("every ensemble member diverged at eps = {eps}")));
    }
    Ok(sample.points)
}

fn semidistance_with_se<T: Real>(a: &[SpectralField<T>], b: &[SpectralField<T>]) -> Result<(f64, f64)> {
    let d = hausdorff_points(a, b, SpaceTag::H)?;
    // Nearest-neighbour distances of each point of A; the semidistance is their max.
    let near: Vec<f64> = a.iter().map(|x| hausdorff_points(std::slice::from_ref(x), b, SpaceTag::H)).collect::<Result<_>>()?;
    let se = jackknife_se(near.len(), |idx| idx.iter().map(|&i| near[i]).fold(0.0, f64::max));
    Ok((d, se))
}

/// `d(A_eps, A_0)` for each `eps`, where `A_0` is the cloud of the deterministic
/// system. All clouds share the initial points and the noise sample.
pub fn usc_sweep<T: Real>(
    epsilons: &[f64],
    schedule: &PullbackSchedule,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    radius: f64,
    ensemble: usize,
    seed: u64,
) -> Result<Vec<UscPoint>> {
    if epsilons.iter().any(|e| !(*e >= 0.0 && *e <= 1.0)) {
        return Err(invalid("noise intensities must lie in [0, 1]"));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("noise intensities must be sorted in decreasing order"));
    }
    let base = cloud(0.0, schedule, params, noise, radius, ensemble, seed)?;
    epsilons
        .iter()
        .map(|&eps| {
            let (distance, std_error) = if eps == 0.0 {
                (hausdorff_points(&base, &base, SpaceTag::H)?, 0.0)
            } else {
                semidistance_with_se(&cloud(eps, schedule, params, noise, radius, ensemble, seed)?, &base)?
            };
            Ok(UscPoint { epsilon: eps, distance, std_error })
        })
        .collect()
}

/// `d(A_eps, A_eps0)` under a shared noise sample and shared initial points.
pub fn usc_pair<T: Real>(
    eps: f64,
    eps0: f64,
    schedule: &PullbackSchedule,
    params: &ScbfParams<T>,
    noise: &NoiseConfig,
    radius: f64,
    ensemble: usize,
    seed: u64,
) -> Result<UscPoint> {
    for e in [eps, eps0] {
        if !(e > 0.0 && e <= 1.0) {
            return Err(invalid(format!("noise intensity {e} must lie in (0, 1]")));
        }
    }
    let b = cloud(eps0, schedule, params, noise, radius, ensemble, seed)?;
    let (distance, std_error) = if eps == eps0 {
        (hausdorff_points(&b, &b, SpaceTag::H)?, 0.0)
    } else {
        semidistance_with_se(&cloud(eps, schedule, params, noise, radius, ensemble, seed)?, &b)?
    };
    Ok(UscPoint { epsilon: eps, distance, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::testutil::{noise, params};

    #[test]
    fn zero_intensity_has_zero_distance() {
        let p = params(8, 0.5, 0.0);
        let sched = PullbackSchedule::new(vec![-0.5]).unwrap();
        let out = usc_sweep(&[0.0], &sched, &p, &noise(&p, 0.1, 1), 2.0, 3, 1).unwrap();
        assert_eq!(out[0].distance, 0.0);
        let same = usc_pair(0.3, 0.3, &sched, &p, &noise(&p, 0.1, 1), 2.0, 3, 1).unwrap();
        assert_eq!(same.distance, 0.0);
        assert!(usc_sweep(&[0.1, 0.5], &sched, &p, &noise(&p, 0.1, 1), 2.0, 3, 1).is_err());
        assert!(usc_pair(0.0, 0.3, &sched, &p, &noise(&p, 0.1, 1), 2.0, 3, 1).is_err());
    }

    #[test]
    fn unforced_distance_shrinks_with_intensity() {
        let p = params(8, 0.5, 0.0);
        let sched = PullbackSchedule::new(vec![-6.0]).unwrap();
        let out = usc_sweep(&[0.5, 0.1], &sched, &p, &noise(&p, 0.1, 2), 2.0, 3, 5).unwrap();
        assert!(out[1].distance < out[0].distance, "{out:?}");
    }
}
