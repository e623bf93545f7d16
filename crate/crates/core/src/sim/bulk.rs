//! Lindley recursion `Q_{k+1} = (Q_k + A_k - s)⁺` with Poisson work.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{domain, Result};
use crate::grw::BulkModel;

#[derive(Debug, Clone, Default)]
pub(crate) struct BulkStats {
    pub periods: u64,
    pub empty: u64,
    pub queue_sum: f64,
    pub path: Vec<f64>,
}

pub(crate) fn run<R: Rng + ?Sized>(
    model: &BulkModel,
    periods: u64,
    warmup: u64,
    record: bool,
    rng: &mut R,
) -> Result<BulkStats> {
    let arrivals = Poisson::new(model.lambda).map_err(|e| crate::QedError::Domain(e.to_string()))?;
    if warmup >= periods {
        return domain(format!("warmup {warmup} must be below the {periods} simulated periods"));
    }
    let s = model.servers;
    let mut q: u64 = 0;
    let mut stats = BulkStats::default();
    if record {
        stats.path.push(0.0);
    }
    for k in 0..periods {
        let a = arrivals.sample(rng) as u64;
        q = (q + a).saturating_sub(s);
        if k >= warmup {
            stats.periods += 1;
            stats.queue_sum += q as f64;
            if q == 0 {
                stats.empty += 1;
            }
        }
        if record {
            stats.path.push(q as f64);
        }
    }
    Ok(stats)
}
