//! Non-homogeneous Poisson arrivals by thinning.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{config, domain, Result};
use crate::time_varying::RateFunction;

/// Event times on `[start, end)` for the rate `λ`.
///
/// The horizon is cut into unit-order cells; in each cell candidates come
/// from a homogeneous process at the cell maximum of `λ` and are kept with
/// probability `λ(t)/max`.
pub fn nhpp_arrivals<R: Rng + ?Sized>(rate: &RateFunction, start: f64, end: f64, rng: &mut R) -> Result<Vec<f64>> {
    rate.validate()?;
    if !(start.is_finite() && end.is_finite() && end > start) {
        return domain(format!("arrival window [{start}, {end}) is empty or infinite"));
    }
    let cells = (end - start).ceil().max(1.0) as usize;
    let width = (end - start) / cells as f64;
    let mut times = Vec::new();
    for i in 0..cells {
        let a = start + i as f64 * width;
        let b = if i + 1 == cells { end } else { a + width };
        let bound = rate.max_on(a, b);
        if !bound.is_finite() {
            return config(format!("rate is unbounded on [{a}, {b}]"));
        }
        if bound <= 0.0 {
            continue;
        }
        let mut t = a;
        loop {
            t += rng.sample::<f64, _>(Exp1) / bound;
            if t >= b {
                break;
            }
            if rng.random::<f64>() * bound < rate.rate(t) {
                times.push(t);
            }
        }
    }
    Ok(times)
}
