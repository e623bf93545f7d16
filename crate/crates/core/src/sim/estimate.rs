//! Confidence intervals from independent replication means.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub point: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub replications: usize,
}

/// Two-sided Student-t critical value with `df` degrees of freedom.
fn t_critical(level: f64, df: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    t.inverse_cdf(0.5 + level / 2.0)
}

impl SimEstimate {
    /// Mean and standard error of per-replication values.
    pub fn from_replications(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return config(format!("a confidence interval needs at least 2 replications, got {n}"));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let stderr = (var / n as f64).sqrt();
        let half = t_critical(0.95, n - 1) * stderr;
        Ok(Self {
            point: mean,
            stderr,
            ci95: (mean - half, mean + half),
            replications: n,
        })
    }

    /// Interval at another confidence level, e.g. 0.99.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let half = t_critical(level, self.replications - 1) * self.stderr;
        (self.point - half, self.point + half)
    }

    pub fn covers(&self, x: f64, level: f64) -> bool {
        let (lo, hi) = self.interval(level);
        lo <= x && x <= hi
    }
}
