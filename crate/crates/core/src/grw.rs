//! Bulk-service queue and the maximum of the Gaussian random walk.
//!
//! Each period `Pois(λ)` work arrives and up to `s` units are served, so the
//! queue follows `Q_{k+1} = (Q_k + A_k - s)^+`. Spitzer's identity gives the
//! stationary law through the partial sums `S_k = Pois(kλ) - ks`:
//!
//! ```text
//! P(Q = 0) = exp(-Σ_k P(S_k > 0)/k)      E[Q] = Σ_k E[S_k⁺]/k
//! ```
//!
//! With `s = λ + β√λ`, `Q/√λ` converges to `M_β`, the all-time maximum of a
//! random walk with `N(-β, 1)` steps, whose constants are zeta series.

use serde::{Deserialize, Serialize};

use crate::error::{domain, numerical, unstable, Result};
use crate::specfun::{half_cos_sign, poisson_pmf, poisson_tail, zeta, zeta_half, SeriesControl, ZetaBranch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkModel {
    pub lambda: f64,
    pub servers: u64,
    #[serde(default)]
    pub control: SeriesControl,
}

impl BulkModel {
    pub fn new(lambda: f64, servers: u64) -> Self {
        Self {
            lambda,
            servers,
            control: SeriesControl::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.servers == 0 {
            return domain("servers must be at least 1");
        }
        if self.lambda >= self.servers as f64 {
            return unstable(format!(
                "bulk queue needs lambda < s (lambda={}, s={})",
                self.lambda, self.servers
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoisPlus {
    /// `P(N > c)`
    pub p_gt: f64,
    /// `E[(N - c)⁺]`
    pub plus_mean: f64,
}

/// Tail and positive-part mean of `N ~ Pois(mean)` beyond `c`.
///
/// `E[(N-c)⁺] = m P(N >= c) - c P(N >= c+1)`, rearranged as
/// `m P(N = c) + (m - c) P(N > c)` so the two large terms do not cancel when
/// `c` is close to `m`.
pub fn pois_plus_stats(mean: f64, c: u64) -> Result<PoisPlus> {
    let tail = poisson_tail(mean, c)?;
    let plus_mean = mean * poisson_pmf(mean, c) + (mean - c as f64) * tail.p_gt;
    Ok(PoisPlus {
        p_gt: tail.p_gt,
        plus_mean: plus_mean.max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkStationary {
    pub p_empty: f64,
    pub mean_queue: f64,
    /// `E[Q]/√s`
    pub mean_queue_over_sqrt_s: f64,
    /// `E[Q]/√λ`
    pub mean_queue_over_sqrt_lambda: f64,
    pub terms_used: usize,
    /// Geometric estimates of the truncated remainders (already included).
    pub remainder_log_p: f64,
    pub remainder_mean: f64,
}

/// Tail of a positive series whose terms decay geometrically at ratio `r`.
fn geometric_remainder(last: f64, prev: f64) -> f64 {
    if prev <= 0.0 || last <= 0.0 {
        return 0.0;
    }
    let r = last / prev;
    if r < 1.0 {
        last * r / (1.0 - r)
    } else {
        f64::INFINITY
    }
}

/// Stationary empty probability and mean queue via Spitzer's identity.
pub fn bulk_stationary(model: &BulkModel) -> Result<BulkStationary> {
    model.validate()?;
    let (lambda, s) = (model.lambda, model.servers);
    let tol = model.control.abs_tol;
    let mut log_p = 0.0;
    let mut mean = 0.0;
    let (mut prev_p, mut prev_m) = (0.0, 0.0);
    for k in 1..=model.control.max_terms {
        let kf = k as f64;
        let stats = pois_plus_stats(kf * lambda, k as u64 * s)?;
        let tp = stats.p_gt / kf;
        let tm = stats.plus_mean / kf;
        log_p += tp;
        mean += tm;
        if k > 10 && tp < tol && tm < tol {
            let rem_p = geometric_remainder(tp, prev_p);
            let rem_m = geometric_remainder(tm, prev_m);
            if rem_p.is_finite() && rem_m.is_finite() {
                log_p += rem_p;
                mean += rem_m;
                return Ok(BulkStationary {
                    p_empty: (-log_p).exp(),
                    mean_queue: mean,
                    mean_queue_over_sqrt_s: mean / (s as f64).sqrt(),
                    mean_queue_over_sqrt_lambda: mean / lambda.sqrt(),
                    terms_used: k,
                    remainder_log_p: rem_p,
                    remainder_mean: rem_m,
                });
            }
        }
        prev_p = tp;
        prev_m = tm;
    }
    numerical(format!(
        "Spitzer series for lambda={lambda}, s={s} did not reach {tol:e} in {} terms",
        model.control.max_terms
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrwConstants {
    pub beta: f64,
    /// `P(M_β = 0)`
    pub p_zero: f64,
    /// `E[M_β]`
    pub mean_max: f64,
    pub terms_used: usize,
}

/// Upper end of the region where the zeta series converge.
pub fn grw_beta_limit() -> f64 {
    2.0 * std::f64::consts::PI.sqrt()
}

/// `P(M_β = 0)` and `E[M_β]` from their zeta series, `0 < β < 2√π`.
///
/// Through the functional equation each term becomes
/// `ζ(l+½)·Γ(l+½)/l!·(β²/4π)^l` times bounded factors, so the terms are built
/// up by ratios without forming the large `ζ(½-l)` values.
pub fn grw_constants(beta: f64) -> Result<GrwConstants> {
    grw_constants_with(beta, &SeriesControl::default())
}

pub fn grw_constants_with(beta: f64, control: &SeriesControl) -> Result<GrwConstants> {
    control.validate()?;
    if !(beta > 0.0 && beta < grw_beta_limit()) {
        return domain(format!("beta must lie in (0, 2√π), got {beta}"));
    }
    let pi = std::f64::consts::PI;
    let q = beta * beta / (4.0 * pi);
    let mut gamma_ratio = pi.sqrt(); // Γ(l+½)/l!
    let mut qpow = 1.0;
    let mut p_sum = 0.0;
    let mut m_sum = 0.0;
    let mean_scale = std::f64::consts::SQRT_2 / (2.0 * pi).powf(1.5);
    let mut terms = 0;
    for l in 0..control.max_terms {
        let lf = l as f64;
        if l > 0 {
            gamma_ratio *= (lf - 0.5) / lf;
            qpow *= q;
        }
        let alt = if l % 2 == 0 { 1.0 } else { -1.0 };
        let p_term = half_cos_sign(l as u64) * alt * zeta(lf + 0.5)? * gamma_ratio * qpow / (pi.sqrt() * (2.0 * lf + 1.0));
        let m_term = half_cos_sign(l as u64 + 1) * alt * mean_scale * zeta(lf + 1.5)? * (lf + 0.5) * gamma_ratio * qpow
            / ((2.0 * lf + 1.0) * (2.0 * lf + 2.0));
        p_sum += p_term;
        m_sum += m_term;
        terms = l + 1;
        if l > 10 && p_term.abs() < control.abs_tol && m_term.abs() < control.abs_tol {
            let sqrt_2pi = (2.0 * pi).sqrt();
            let zeta_half_val = zeta_half(0, ZetaBranch::Plus)?;
            let p_zero = std::f64::consts::SQRT_2 * beta * (beta / sqrt_2pi * p_sum).exp();
            let mean_max = 1.0 / (2.0 * beta) + zeta_half_val / sqrt_2pi + beta / 4.0 + beta * beta / sqrt_2pi * m_sum;
            return Ok(GrwConstants {
                beta,
                p_zero,
                mean_max,
                terms_used: terms,
            });
        }
    }
    numerical(format!(
        "zeta series for beta={beta} did not converge in {terms} terms (ratio β²/4π = {q})"
    ))
}

/// Capacity `μ_A + βσ_A` for demand with mean `μ_A` and deviation `σ_A`.
pub fn many_sources_staffing(mu_a: f64, sigma_a: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("mu_A", mu_a), ("sigma_A", sigma_a), ("beta", beta)] {
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("{name} must be positive, got {v}"));
        }
    }
    Ok(mu_a + beta * sigma_a)
}
