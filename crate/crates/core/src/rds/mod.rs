//! Random-dynamical-system diagnostics on top of the solver: pullback
//! ensembles, Hausdorff semidistances between clouds, the cocycle law,
//! flattening tails, upper semicontinuity in `eps` and ergodic averages.

mod cloud;
mod cocycle;
mod ensemble;
mod ergodic;
mod flatten;
mod gronwall;
mod stats;
mod usc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use cloud::{cloud_diameter, distance, hausdorff_points, hausdorff_semidistance, read_sample, write_sample};
pub use cocycle::{cocycle_residual, local_truncation_scale};
pub use ensemble::{attractor_sample, uniform_ball, AttractorSample};
pub use ergodic::{time_average_observable, Observable, TimeAverage};
pub use flatten::{flattening_profile, flattening_tail, FlatteningProfile};
pub use gronwall::{lipschitz_ratio, usc_gronwall, GronwallTrace};
pub use stats::{batch_means, jackknife_se, linear_fit, LinearFit};
pub use usc::{usc_pair, usc_sweep, UscPoint};

/// Norm used to compare points of a cloud.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceTag {
    H,
    V,
}

impl SpaceTag {
    /// Exponent `s` of the weight `lambda^s` in the squared norm.
    pub fn weight(self) -> i32 {
        match self {
            SpaceTag::H => 0,
            SpaceTag::V => 1,
        }
    }
}

impl std::str::FromStr for SpaceTag {
    type Err = crate::ScbfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(SpaceTag::H),
            "V" | "v" => Ok(SpaceTag::V),
            _ => Err(invalid(format!("unknown space tag {s:?}, expected H or V"))),
        }
    }
}

/// Strictly decreasing pullback times `s <= 0`, all evaluated at time 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackSchedule {
    pullback_times: Vec<f64>,
}

impl PullbackSchedule {
    pub fn new(pullback_times: Vec<f64>) -> Result<Self> {
        if pullback_times.is_empty() {
            return Err(invalid("pullback schedule is empty"));
        }
        if let Some(s) = pullback_times.iter().find(|s| !(**s <= 0.0) || !s.is_finite()) {
            return Err(invalid(format!("pullback time {s} must be finite and <= 0")));
        }
        if pullback_times.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("pullback times must be strictly decreasing"));
        }
        Ok(Self { pullback_times })
    }

    pub fn times(&self) -> &[f64] {
        &self.pullback_times
    }

    pub fn evaluation_time(&self) -> f64 {
        0.0
    }

    /// Most negative pullback time.
    pub fn deepest(&self) -> f64 {
        *self.pullback_times.last().unwrap()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    pub use crate::solver::testutil::{field, noise, params};
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(PullbackSchedule::new(vec![-1.0, -2.0, -4.0]).is_ok());
        assert!(PullbackSchedule::new(vec![]).is_err());
        assert!(PullbackSchedule::new(vec![-1.0, -1.0]).is_err());
        assert!(PullbackSchedule::new(vec![-2.0, -1.0]).is_err());
        assert!(PullbackSchedule::new(vec![1.0]).is_err());
        assert_eq!(PullbackSchedule::new(vec![0.0, -3.0]).unwrap().deepest(), -3.0);
    }

    #[test]
    fn tags_parse() {
        assert_eq!("H".parse::<SpaceTag>().unwrap(), SpaceTag::H);
        assert_eq!("v".parse::<SpaceTag>().unwrap(), SpaceTag::V);
        assert!("L".parse::<SpaceTag>().is_err());
    }
}
