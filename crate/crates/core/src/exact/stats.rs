use serde::Serialize;

use crate::error::{Error, Result};

/// Quenched and annealed averages of `Y = -log Υ` at one depth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsemblePoint {
    pub t: usize,
    /// Mean of `-log Υ`.
    pub quenched_mean: f64,
    pub quenched_err: f64,
    /// `-log` of the mean of `Υ`.
    pub annealed: f64,
    /// Jackknife standard error of `annealed`.
    pub annealed_err: f64,
    pub mean_upsilon: f64,
    pub upsilon_err: f64,
    /// Sample variance of `Υ / mean(Υ)`.
    pub relative_variance: f64,
    pub samples: usize,
}

impl EnsemblePoint {
    /// Summarizes `Υ` samples; all must be positive.
    pub fn from_samples(t: usize, upsilons: &[f64]) -> Result<Self> {
        let m = upsilons.len();
        if m == 0 {
            return Err(Error::invalid("no samples to average"));
        }
        if let Some(bad) = upsilons.iter().find(|u| !(**u > 0.0) || !u.is_finite()) {
            return Err(Error::numerical(
                "exact",
                format!("Υ sample {bad} is not positive"),
            ));
        }
        let mf = m as f64;
        let sum: f64 = upsilons.iter().sum();
        let mean = sum / mf;
        let ys: Vec<f64> = upsilons.iter().map(|u| -u.ln()).collect();
        let qmean = ys.iter().sum::<f64>() / mf;

        let (quenched_err, upsilon_err, annealed_err, relative_variance) = if m < 2 {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let var_y = ys.iter().map(|y| (y - qmean).powi(2)).sum::<f64>() / (mf - 1.0);
            let var_u = upsilons.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (mf - 1.0);
            let loo: Vec<f64> = upsilons
                .iter()
                .map(|u| -((sum - u) / (mf - 1.0)).ln())
                .collect();
            let loo_mean = loo.iter().sum::<f64>() / mf;
            let jk =
                ((mf - 1.0) / mf * loo.iter().map(|y| (y - loo_mean).powi(2)).sum::<f64>()).sqrt();
            (
                (var_y / mf).sqrt(),
                (var_u / mf).sqrt(),
                jk,
                var_u / (mean * mean),
            )
        };
        Ok(EnsemblePoint {
            t,
            quenched_mean: qmean,
            quenched_err,
            annealed: -mean.ln(),
            annealed_err,
            mean_upsilon: mean,
            upsilon_err,
            relative_variance,
            samples: m,
        })
    }
}

/// Per-depth ensemble summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub points: Vec<EnsemblePoint>,
}

impl EnsembleStats {
    /// Builds the series from `samples[i][t]`, the `Υ` of realization `i`
    /// after `t` layers.
    pub fn from_trajectories(samples: &[Vec<f64>]) -> Result<Self> {
        let depth = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != depth) {
            return Err(Error::invalid("trajectories have different lengths"));
        }
        let mut column = Vec::with_capacity(samples.len());
        let points = (0..depth)
            .map(|t| {
                column.clear();
                column.extend(samples.iter().map(|s| s[t]));
                EnsemblePoint::from_samples(t, &column)
            })
            .collect::<Result<_>>()?;
        Ok(EnsembleStats { points })
    }

    pub fn at(&self, t: usize) -> Option<&EnsemblePoint> {
        self.points.iter().find(|p| p.t == t)
    }
}
