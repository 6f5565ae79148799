use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Per-step diagnostics of one trajectory. Norm series have one entry per
/// time level; `ledger[n]` is the normalized residual of the energy inequality
/// over the step `[t_n, t_{n+1}]`, so it is one shorter.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `||u||_H^2`
    pub h_norm2: Vec<f64>,
    /// `||u||_V^2`
    pub v_norm2: Vec<f64>,
    /// `||u||_{L^{r+1}}^{r+1}`
    pub lr1_norm: Vec<f64>,
    /// `||v||_H^2`, `||v||_V^2`, `||A v||_H^2` of the transformed variable.
    pub transformed_h2: Vec<f64>,
    pub transformed_v2: Vec<f64>,
    pub transformed_a2: Vec<f64>,
    /// `||z||_H^2` and `||z||_V^2` of the noise.
    pub noise_h2: Vec<f64>,
    pub noise_v2: Vec<f64>,
    pub ledger: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest positive ledger residual, 0 if the inequality holds at every step.
    pub fn max_violation(&self) -> f64 {
        self.ledger.iter().fold(0.0, |m, &x| m.max(x))
    }

    /// Trapezoidal integral of a series over the times `t >= from`.
    pub fn integral_from(&self, series: &[f64], from: f64) -> f64 {
        let mut acc = 0.0;
        for n in 1..self.times.len() {
            if self.times[n - 1] >= from - 1e-12 {
                acc += 0.5 * (series[n] + series[n - 1]) * (self.times[n] - self.times[n - 1]);
            }
        }
        acc
    }

    /// CSV with header `t,h_norm2,v_norm2,lr1_norm,ledger_residual`. The last
    /// row has no step after it and leaves the residual empty.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "h_norm2", "v_norm2", "lr1_norm", "ledger_residual"]).map_err(csv_err)?;
        for n in 0..self.times.len() {
            let ledger = self.ledger.get(n).map(|x| format!("{x:e}")).unwrap_or_default();
            out.write_record([
                format!("{}", self.times[n]),
                format!("{:e}", self.h_norm2[n]),
                format!("{:e}", self.v_norm2[n]),
                format!("{:e}", self.lr1_norm[n]),
                ledger,
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> crate::ScbfError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e.into(),
        other => crate::ScbfError::InvalidInput(format!("csv: {other:?}")),
    }
}
