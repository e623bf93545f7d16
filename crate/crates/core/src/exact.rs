//! Exact stationary analysis of Markovian many-server queues.
//!
//! The free functions [`erlang_b`], [`erlang_c`] and [`erlang_c_real`] take the
//! offered load `lambda` with unit service rate. [`QueueModel`] carries an
//! explicit `mu` and is what the measure functions and the simulator consume.

use serde::{Deserialize, Serialize};

use crate::error::{domain, numerical, unstable, Result};
use crate::quadrature::integrate;
use crate::specfun::SeriesControl;

/// Model variant on top of the plain M/M/s queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extension {
    None,
    /// At most `n` jobs in the system; arrivals finding `n` are lost.
    FiniteBuffer { n: u64 },
    /// Exponential patience with rate `theta` for waiting jobs.
    Abandonment { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    pub lambda: f64,
    pub mu: f64,
    pub servers: u64,
    pub extension: Extension,
}

impl QueueModel {
    pub fn mms(lambda: f64, servers: u64) -> Self {
        Self {
            lambda,
            mu: 1.0,
            servers,
            extension: Extension::None,
        }
    }

    pub fn mmsn(lambda: f64, servers: u64, n: u64) -> Self {
        Self {
            extension: Extension::FiniteBuffer { n },
            ..Self::mms(lambda, servers)
        }
    }

    pub fn erlang_a(lambda: f64, servers: u64, theta: f64) -> Self {
        Self {
            extension: Extension::Abandonment { theta },
            ..Self::mms(lambda, servers)
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    /// Offered load `λ/μ`.
    pub fn load(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Utilisation `ρ = λ/(sμ)` of the underlying M/M/s queue.
    pub fn rho(&self) -> f64 {
        self.lambda / (self.servers as f64 * self.mu)
    }

    /// Parameter checks that do not depend on stability.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return domain(format!("mu must be positive, got {}", self.mu));
        }
        if self.servers == 0 {
            return domain("servers must be at least 1");
        }
        match self.extension {
            Extension::None => {}
            Extension::FiniteBuffer { n } => {
                if n < self.servers {
                    return domain(format!("buffer limit n={n} is below servers s={}", self.servers));
                }
            }
            Extension::Abandonment { theta } => {
                if !(theta >= 0.0 && theta.is_finite()) {
                    return domain(format!("theta must be non-negative, got {theta}"));
                }
            }
        }
        Ok(())
    }

    /// Dispatch to the measure routine matching the extension.
    pub fn measures(&self) -> Result<StationaryMeasures> {
        match self.extension {
            Extension::None => mms_measures(self),
            Extension::FiniteBuffer { .. } => mmsn_measures(self),
            Extension::Abandonment { .. } => erlang_a_measures(self),
        }
    }
}

/// Stationary performance of a queue. `mean_delay` and `mean_queue` refer to
/// waiting (not sojourn) time and waiting jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryMeasures {
    pub delay_prob: f64,
    pub block_prob: Option<f64>,
    pub abandon_prob: Option<f64>,
    pub mean_delay: f64,
    pub mean_queue: f64,
    pub utilization: f64,
    /// `pi[k] = P(Q = k)` for the states kept after truncation.
    pub pi: Vec<f64>,
    /// Probability mass beyond the last entry of `pi`.
    pub tail_mass: f64,
}

fn check_load(s: f64, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("servers must be positive, got {s}"));
    }
    Ok(())
}

/// Erlang loss probability `B(s, λ)`.
pub fn erlang_b(s: u64, lambda: f64) -> Result<f64> {
    check_load(s as f64, lambda)?;
    let mut b = 1.0;
    for k in 1..=s {
        b = lambda * b / (k as f64 + lambda * b);
    }
    Ok(b)
}

/// Erlang delay probability `C(s, λ)` for integer `s > λ`.
pub fn erlang_c(s: u64, lambda: f64) -> Result<f64> {
    check_load(s as f64, lambda)?;
    if lambda >= s as f64 {
        return unstable(format!("erlang_c needs lambda < s (lambda={lambda}, s={s})"));
    }
    let rho = lambda / s as f64;
    let b = erlang_b(s, lambda)?;
    Ok(1.0 / (rho + (1.0 - rho) / b))
}

/// Erlang C extended to real `s > λ` through its integral representation
/// `1/C = ∫₀^∞ u e^{-u} (1 + u/λ)^{s-1} du / λ`.
///
/// The integrand is handled in log space relative to its mode
/// `u* = ((s-λ) + √((s-λ)² + 4λ))/2`, so nothing overflows for large `s`.
pub fn erlang_c_real(s: f64, lambda: f64) -> Result<f64> {
    check_load(s, lambda)?;
    if lambda >= s {
        return unstable(format!("erlang_c_real needs lambda < s (lambda={lambda}, s={s})"));
    }
    let log_f = |u: f64| u.ln() - u + (s - 1.0) * (u / lambda).ln_1p();
    let d = s - lambda;
    let mode = 0.5 * (d + (d * d + 4.0 * lambda).sqrt());
    let peak = log_f(mode);
    let curv = 1.0 / (mode * mode) + (s - 1.0) / ((lambda + mode) * (lambda + mode));
    let width = 1.0 / curv.sqrt();
    // Walk out until the integrand is e^{-60} below its peak.
    let mut upper = mode + width;
    while log_f(upper) - peak > -60.0 {
        upper += width.max(1.0);
    }
    let f = |u: f64| if u <= 0.0 { 0.0 } else { (log_f(u) - peak).exp() };
    let left = integrate(f, 0.0, mode, 1e-300, 1e-13)?;
    let right = integrate(f, mode, upper, 1e-300, 1e-13)?;
    let scaled = left.value + right.value;
    if !(scaled > 0.0 && scaled.is_finite()) {
        return numerical(format!(
            "real-s Erlang C integral degenerate (s={s}, lambda={lambda}, mode={mode}, value={scaled})"
        ));
    }
    // C = λ / (e^{peak} · scaled)
    Ok((lambda.ln() - peak - scaled.ln()).exp().min(1.0))
}

/// Stationary law of the M/M/s queue (`extension` must be `None`).
pub fn mms_measures(model: &QueueModel) -> Result<StationaryMeasures> {
    model.validate()?;
    if model.extension != Extension::None {
        return domain("mms_measures expects a model without extension");
    }
    let s = model.servers;
    let a = model.load();
    let rho = model.rho();
    if rho >= 1.0 {
        return unstable(format!("M/M/s needs rho < 1, got rho={rho}"));
    }
    let c = erlang_c(s, a)?;
    let mean_delay = c / ((1.0 - rho) * s as f64 * model.mu);

    let control = SeriesControl::default();
    let pi_s = c * (1.0 - rho);
    let mut pi = vec![0.0; s as usize + 1];
    pi[s as usize] = pi_s;
    for k in (1..=s as usize).rev() {
        pi[k - 1] = pi[k] * k as f64 / a;
    }
    // Geometric tail above s, truncated once the remainder drops below abs_tol.
    let mut term = pi_s;
    let mut tail = pi_s * rho / (1.0 - rho);
    while tail >= control.abs_tol && pi.len() < s as usize + control.max_terms {
        term *= rho;
        pi.push(term);
        tail = term * rho / (1.0 - rho);
    }
    Ok(StationaryMeasures {
        delay_prob: c,
        block_prob: None,
        abandon_prob: None,
        mean_delay,
        mean_queue: model.lambda * mean_delay,
        utilization: rho,
        pi,
        tail_mass: tail,
    })
}

/// Normalised birth–death stationary law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathSolution {
    pub pi: Vec<f64>,
    pub tail_mass: f64,
}

/// Solve `π_k ∝ ∏_{i<k} birth(i)/death(i+1)` for a birth–death chain on
/// `{0, 1, ...}`.
///
/// The state space ends at the first `k` with `birth(k) = 0`. Otherwise states
/// are added until the geometric tail estimate `π_k r/(1-r)`, with
/// `r = birth(k)/death(k+1)`, falls below `control.abs_tol`; the estimate is a
/// bound whenever the ratios are eventually nonincreasing, which holds for all
/// queueing chains in this crate. Weights are kept in log space.
pub fn solve_birth_death<B, D>(
    birth: B,
    death: D,
    control: &SeriesControl,
    max_states: usize,
) -> Result<BirthDeathSolution>
where
    B: Fn(u64) -> f64,
    D: Fn(u64) -> f64,
{
    control.validate()?;
    birth_death(birth, death, Some(control.abs_tol), max_states)
}

/// Shared worker; `tol = None` walks the chain until `birth(k) = 0`.
fn birth_death<B, D>(birth: B, death: D, tol: Option<f64>, max_states: usize) -> Result<BirthDeathSolution>
where
    B: Fn(u64) -> f64,
    D: Fn(u64) -> f64,
{
    let mut logw: Vec<f64> = vec![0.0];
    let mut max_log = 0.0_f64;
    let mut sum = 1.0_f64; // Σ exp(logw - max_log)
    let mut k = 0u64;
    loop {
        let b = birth(k);
        if !(b >= 0.0 && b.is_finite()) {
            return domain(format!("birth rate at state {k} is {b}"));
        }
        if b == 0.0 {
            return Ok(normalise(&logw, max_log, sum, 0.0));
        }
        let d = death(k + 1);
        if !(d > 0.0 && d.is_finite()) {
            return domain(format!("death rate at state {} must be positive, got {d}", k + 1));
        }
        let ratio = b / d;
        let last = *logw.last().expect("non-empty");
        if let Some(tol) = tol.filter(|_| ratio < 1.0) {
            let tail_rel = (last - max_log).exp() * ratio / (1.0 - ratio);
            if tail_rel < tol * sum {
                return Ok(normalise(&logw, max_log, sum, tail_rel));
            }
        }
        if logw.len() >= max_states {
            if ratio >= 1.0 {
                return unstable(format!(
                    "birth-death normalisation diverges: rate ratio {ratio} >= 1 at state {k} (cap {max_states})"
                ));
            }
            return numerical(format!(
                "birth-death tail still above {} after {max_states} states",
                tol.unwrap_or(0.0)
            ));
        }
        let next = last + ratio.ln();
        if next > max_log {
            sum = sum * (max_log - next).exp() + 1.0;
            max_log = next;
        } else {
            sum += (next - max_log).exp();
        }
        logw.push(next);
        k += 1;
    }
}

fn normalise(logw: &[f64], max_log: f64, sum: f64, tail_rel: f64) -> BirthDeathSolution {
    let total = sum + tail_rel;
    BirthDeathSolution {
        pi: logw.iter().map(|w| (w - max_log).exp() / total).collect(),
        tail_mass: tail_rel / total,
    }
}

fn occupancy_moments(pi: &[f64], s: u64) -> (f64, f64, f64) {
    // (P(Q >= s), E[(Q-s)^+], E[min(Q,s)])
    let mut p_wait = 0.0;
    let mut queue = 0.0;
    let mut busy = 0.0;
    for (k, &p) in pi.iter().enumerate() {
        let k = k as u64;
        if k >= s {
            p_wait += p;
            queue += (k - s) as f64 * p;
        }
        busy += k.min(s) as f64 * p;
    }
    (p_wait, queue, busy)
}

/// M/M/s/n: finite room for `n` jobs in total.
pub fn mmsn_measures(model: &QueueModel) -> Result<StationaryMeasures> {
    model.validate()?;
    let Extension::FiniteBuffer { n } = model.extension else {
        return domain("mmsn_measures expects a finite-buffer model");
    };
    let s = model.servers;
    let (lambda, mu) = (model.lambda, model.mu);
    let sol = birth_death(
        |k| if k < n { lambda } else { 0.0 },
        |k| mu * k.min(s) as f64,
        None,
        n as usize + 1,
    )?;
    let pi_n = sol.pi[n as usize];
    let admitted = 1.0 - pi_n;
    let (p_ge_s, queue, busy) = occupancy_moments(&sol.pi, s);
    Ok(StationaryMeasures {
        delay_prob: ((p_ge_s - pi_n) / admitted).max(0.0),
        block_prob: Some(pi_n),
        abandon_prob: None,
        mean_delay: queue / (lambda * admitted),
        mean_queue: queue,
        utilization: busy / s as f64,
        pi: sol.pi,
        tail_mass: 0.0,
    })
}

/// Erlang-A (M/M/s+M). `theta = 0` falls back to [`mms_measures`].
///
/// `mean_delay` is `E[(Q-s)^+]/λ`, the mean wait averaged over all arrivals
/// (abandoning ones included), so Little's law holds exactly.
pub fn erlang_a_measures(model: &QueueModel) -> Result<StationaryMeasures> {
    model.validate()?;
    let Extension::Abandonment { theta } = model.extension else {
        return domain("erlang_a_measures expects an abandonment model");
    };
    if theta == 0.0 {
        let mut m = mms_measures(&QueueModel {
            extension: Extension::None,
            ..*model
        })?;
        m.abandon_prob = Some(0.0);
        return Ok(m);
    }
    let s = model.servers;
    let (lambda, mu) = (model.lambda, model.mu);
    let sf = s as f64;
    // The chain drifts to about s + (λ - sμ)/θ when overloaded; leave room for
    // a generous band around that, and for the geometric tail when ρ < 1.
    let centre = sf + ((lambda - sf * mu) / theta).max(0.0);
    let mut cap = centre + 200.0 * centre.sqrt() + 50.0;
    let rho = model.rho();
    if rho < 1.0 {
        cap += (30.0 / (1.0 - rho)).min(1e7);
    }
    // Truncate well below the reporting tolerance: the tail also feeds E[(Q-s)^+].
    let sol = birth_death(
        |_| lambda,
        |k| mu * k.min(s) as f64 + theta * k.saturating_sub(s) as f64,
        Some(1e-17),
        cap as usize,
    )?;
    let (p_wait, queue, busy) = occupancy_moments(&sol.pi, s);
    Ok(StationaryMeasures {
        delay_prob: p_wait + sol.tail_mass,
        block_prob: None,
        abandon_prob: Some(theta * queue / lambda),
        mean_delay: queue / lambda,
        mean_queue: queue,
        utilization: (busy + sol.tail_mass * sf) / sf,
        pi: sol.pi,
        tail_mass: sol.tail_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::QedError;

    #[test]
    fn erlang_b_small_cases() {
        assert!((erlang_b(1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((erlang_b(2, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(erlang_b(0, 1.0).is_err());
        assert!(erlang_b(3, 0.0).is_err());
    }

    #[test]
    fn erlang_c_figure_points() {
        assert!((erlang_c(1, 0.6).unwrap() - 0.6).abs() < 1e-15);
        assert!((erlang_c(4, 3.2).unwrap() - 0.596_432).abs() < 1e-6);
        assert!((erlang_c(10, 7.29844).unwrap() - 0.270_30).abs() < 5e-6);
        assert!(matches!(erlang_c(4, 4.0), Err(QedError::Instability(_))));
    }

    #[test]
    fn real_c_matches_integer_c() {
        for &(s, l) in &[(1u64, 0.3), (2, 1.0), (4, 3.2), (10, 9.5), (50, 43.4), (300, 280.0), (2000, 1950.0)] {
            let a = erlang_c(s, l).unwrap();
            let b = erlang_c_real(s as f64, l).unwrap();
            assert!((a - b).abs() < 1e-10, "s={s} l={l}: {a} vs {b}");
        }
        let mid = erlang_c_real(10.5, 7.29844).unwrap();
        assert!(mid < erlang_c(10, 7.29844).unwrap() && mid > erlang_c(11, 7.29844).unwrap());
        assert!(matches!(erlang_c_real(3.0, 3.0), Err(QedError::Instability(_))));
    }

    #[test]
    fn mms_figure_points() {
        let m = mms_measures(&QueueModel::mms(0.6, 1)).unwrap();
        assert!((m.mean_delay - 1.5).abs() < 1e-12);
        let m = mms_measures(&QueueModel::mms(9.5, 10)).unwrap();
        assert!((m.mean_delay - 1.651_171_16).abs() < 1e-6);
        assert!((m.delay_prob - 0.825_585_58).abs() < 1e-6);
        let m = mms_measures(&QueueModel::mms(0.5, 1)).unwrap();
        for (k, p) in m.pi.iter().enumerate().take(20) {
            assert!((p - 0.5 * 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
        let total: f64 = m.pi.iter().sum::<f64>() + m.tail_mass;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mms_with_service_rate() {
        let a = mms_measures(&QueueModel::mms(6.4, 4).with_mu(2.0)).unwrap();
        let b = mms_measures(&QueueModel::mms(3.2, 4)).unwrap();
        assert!((a.delay_prob - b.delay_prob).abs() < 1e-14);
        assert!((a.mean_delay - b.mean_delay / 2.0).abs() < 1e-14);
    }

    #[test]
    fn birth_death_reference_chains() {
        let c = SeriesControl::default();
        let sol = solve_birth_death(|_| 1.0, |k| k as f64, &c, 1000).unwrap();
        let mut p = (-1.0f64).exp();
        for (k, &x) in sol.pi.iter().enumerate() {
            if k > 0 {
                p /= k as f64;
            }
            assert!((x - p).abs() < 1e-15);
        }
        assert!(sol.tail_mass < 1e-12);

        let loss = solve_birth_death(|k| if k < 1 { 1.0 } else { 0.0 }, |k| k.min(1) as f64, &c, 10).unwrap();
        assert_eq!(loss.pi.len(), 2);
        assert!((loss.pi[1] - 0.5).abs() < 1e-15);

        let theta_eq_mu = solve_birth_death(|_| 1.0, |k| k.min(2) as f64 + (k.saturating_sub(2)) as f64, &c, 1000).unwrap();
        assert!((theta_eq_mu.pi[3] - (-1.0f64).exp() / 6.0).abs() < 1e-15);

        assert!(matches!(
            solve_birth_death(|_| 2.0, |_| 1.0, &c, 500),
            Err(QedError::Instability(_))
        ));
    }

    #[test]
    fn mmsn_limits() {
        let m = mmsn_measures(&QueueModel::mmsn(1.0, 1, 1)).unwrap();
        assert!((m.block_prob.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(m.delay_prob, 0.0);

        let s = 10u64;
        let n = s + (40.0 * (s as f64).sqrt()) as u64;
        let a = mmsn_measures(&QueueModel::mmsn(7.0, s, n)).unwrap();
        let b = mms_measures(&QueueModel::mms(7.0, s)).unwrap();
        assert!((a.delay_prob - b.delay_prob).abs() < 1e-8);
        assert!((a.mean_delay - b.mean_delay).abs() < 1e-8);
        assert!(mmsn_measures(&QueueModel::mmsn(1.0, 3, 2)).is_err());
    }

    #[test]
    fn erlang_a_reductions() {
        let m = erlang_a_measures(&QueueModel::erlang_a(1.0, 2, 1.0)).unwrap();
        assert!((m.delay_prob - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-12);
        // Σ_{k≥3} (k-2) e^{-1}/k! = E[N] - 2 + 2P(N=0) + P(N=1) for N ~ Pois(1)
        let want = 1.0 - 2.0 + 3.0 * (-1.0f64).exp();
        assert!((m.abandon_prob.unwrap() - want).abs() < 1e-12, "{:e}", m.abandon_prob.unwrap() - want);

        let small = erlang_a_measures(&QueueModel::erlang_a(7.0, 10, 1e-12)).unwrap();
        let base = mms_measures(&QueueModel::mms(7.0, 10)).unwrap();
        assert!((small.delay_prob - base.delay_prob).abs() < 1e-8);
        assert!((small.mean_delay - base.mean_delay).abs() < 1e-8);

        assert!(matches!(
            erlang_a_measures(&QueueModel::erlang_a(3.0, 2, 0.0)),
            Err(QedError::Instability(_))
        ));
        // Overloaded but stable thanks to abandonment.
        let over = erlang_a_measures(&QueueModel::erlang_a(50.0, 10, 0.5)).unwrap();
        let total: f64 = over.pi.iter().sum::<f64>() + over.tail_mass;
        assert!((total - 1.0).abs() < 1e-12);
        assert!((over.mean_queue - 50.0 * over.mean_delay).abs() < 1e-9);
    }
}
