//! Euler–Maruyama for the Halfin–Whitt diffusion and its abandonment variant.
//!
//! `dX = m(X) dt + √2 dW` with `m(x) = -β - x` below zero and `-β - θx`
//! above (θ = 0 gives the plain Halfin–Whitt drift).

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Default)]
pub(crate) struct DiffusionStats {
    pub steps: u64,
    pub above: u64,
    pub plus_sum: f64,
    pub path_times: Vec<f64>,
    pub path_values: Vec<f64>,
}

pub(crate) fn drift(x: f64, beta: f64, theta: f64) -> f64 {
    if x > 0.0 {
        -beta - theta * x
    } else {
        -beta - x
    }
}

/// Run to `horizon`, collecting statistics after `warmup`; every `stride`-th
/// state is recorded when `stride > 0`.
pub(crate) fn run<R: Rng + ?Sized>(
    beta: f64,
    theta: f64,
    step: f64,
    horizon: f64,
    warmup: f64,
    stride: u64,
    rng: &mut R,
) -> DiffusionStats {
    let total = (horizon / step).round() as u64;
    let skip = (warmup / step).round() as u64;
    let noise = (2.0 * step).sqrt();
    let mut x = 0.0f64;
    let mut stats = DiffusionStats::default();
    if stride > 0 {
        stats.path_times.push(0.0);
        stats.path_values.push(x);
    }
    for k in 1..=total {
        let z: f64 = rng.sample(StandardNormal);
        x += drift(x, beta, theta) * step + noise * z;
        if k > skip {
            stats.steps += 1;
            if x > 0.0 {
                stats.above += 1;
                stats.plus_sum += x;
            }
        }
        if stride > 0 && k % stride == 0 {
            stats.path_times.push(k as f64 * step);
            stats.path_values.push(x);
        }
    }
    stats
}
