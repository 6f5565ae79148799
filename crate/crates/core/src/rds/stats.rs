use serde::Serialize;

use crate::error::{invalid, Result};

/// Least-squares line `y = intercept + slope x` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid(format!("fit needs two equal series of length >= 2, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(invalid("fit abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Leave-one-out standard error of a statistic of `n` items.
pub fn jackknife_se(n: usize, stat: impl Fn(&[usize]) -> f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (1..n).collect();
    let mut values = Vec::with_capacity(n);
    for leave in 0..n {
        values.push(stat(&idx));
        if leave + 1 < n {
            idx[leave] = leave;
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss * (n - 1) as f64 / n as f64).sqrt()
}

/// Mean and batch-means standard error of a correlated series split into
/// `batches` contiguous blocks. A trailing remainder shorter than a block is dropped
/// from the error estimate but kept in the mean.
pub fn batch_means(series: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || series.len() < batches {
        return Err(invalid(format!("{} samples cannot form {batches} batches", series.len())));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let len = series.len() / batches;
    let means: Vec<f64> = series.chunks_exact(len).take(batches).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    let mb = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mb).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((mean, (var / batches as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 3.0).abs() < 1e-14 && (f.r2 - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn jackknife_of_the_mean_is_the_standard_error() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let n = x.len();
        let se = jackknife_se(n, |idx| idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64);
        let mean = x.iter().sum::<f64>() / n as f64;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((se - sd / (n as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn batch_means_of_iid_blocks() {
        let s: Vec<f64> = (0..100).map(|i| (i % 4) as f64).collect();
        let (m, se) = batch_means(&s, 25).unwrap();
        assert_eq!(m, 1.5);
        assert_eq!(se, 0.0);
        assert!(batch_means(&s, 1).is_err());
    }
}
