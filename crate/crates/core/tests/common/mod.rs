//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

/// Poisson pmf on `0..len` by the product recursion, kept separate from the
/// library's log-space evaluation.
pub fn poisson_pmf_table(mean: f64, len: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(len);
    // start from the mode to avoid underflow of e^{-m} for large means
    let mode = mean.floor() as usize;
    let mut log_mode = -mean;
    for k in 1..=mode {
        log_mode += (mean / k as f64).ln();
    }
    p.resize(len, 0.0);
    if mode < len {
        p[mode] = log_mode.exp();
    }
    let mut v = log_mode.exp();
    for (k, slot) in p.iter_mut().enumerate().take(mode.min(len)).rev() {
        v *= (k + 1) as f64 / mean;
        *slot = v;
    }
    let mut v = log_mode.exp();
    for (k, slot) in p.iter_mut().enumerate().skip(mode + 1) {
        v *= mean / k as f64;
        *slot = v;
    }
    p
}

/// `P(N >= c)` and `P(N > c)` by direct summation until terms drop below 1e-18.
pub fn brute_tail(mean: f64, c: usize) -> (f64, f64) {
    let len = (c + 1).max((mean + 40.0 * mean.sqrt() + 60.0) as usize);
    let p = poisson_pmf_table(mean, len + 200);
    let mut geq = 0.0;
    for (k, &pk) in p.iter().enumerate().skip(c) {
        if k > c + 5 && k as f64 > mean && pk < 1e-18 {
            break;
        }
        geq += pk;
    }
    let below: f64 = p[..c].iter().sum();
    // use whichever side is smaller to avoid cancellation
    let geq = if below < 0.5 { 1.0 - below } else { geq };
    (geq, geq - p[c])
}

/// `E[(N - c)⁺]` by direct summation.
pub fn brute_plus_mean(mean: f64, c: usize) -> f64 {
    let len = c + (mean + 40.0 * mean.sqrt() + 100.0) as usize;
    let p = poisson_pmf_table(mean, len);
    p.iter().enumerate().skip(c + 1).map(|(k, pk)| (k - c) as f64 * pk).sum()
}

/// Stationary law of `Q' = (Q + A - s)⁺`, `A ~ Pois(λ)`, by power iteration
/// on the chain truncated where the stationary tail is below 1e-12.
pub struct LindleyOracle {
    pub p_empty: f64,
    pub mean: f64,
    pub iterations: usize,
}

pub fn lindley_value_iteration(lambda: f64, s: usize) -> LindleyOracle {
    let amax = (lambda + 20.0 * lambda.sqrt() + 40.0) as usize;
    let a = poisson_pmf_table(lambda, amax + 1);
    let mut cum = vec![0.0; a.len()];
    let mut acc = 0.0;
    for (k, v) in a.iter().enumerate() {
        acc += v;
        cum[k] = acc;
    }
    let states = 4000usize;
    let mut pi = vec![0.0; states];
    pi[0] = 1.0;
    let mut next = vec![0.0; states];
    let mut iterations = 0;
    loop {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (q, &mass) in pi.iter().enumerate() {
            if mass < 1e-300 {
                continue;
            }
            // arrivals that leave the queue empty
            if s >= q {
                next[0] += mass * cum[(s - q).min(amax)];
            }
            let first = (s + 1).saturating_sub(q);
            for (k, &pk) in a.iter().enumerate().skip(first) {
                let j = (q + k - s).min(states - 1);
                next[j] += mass * pk;
            }
        }
        let diff: f64 = pi.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        iterations += 1;
        if diff < 1e-15 || iterations > 200_000 {
            break;
        }
    }
    let tail: f64 = pi[states - 100..].iter().sum();
    assert!(tail < 1e-12, "truncation too small: tail {tail}");
    LindleyOracle {
        p_empty: pi[0],
        mean: pi.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
        iterations,
    }
}
