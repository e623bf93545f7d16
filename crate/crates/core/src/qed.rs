//! Halfin–Whitt (QED) limits and their refinements.
//!
//! With `s = λ + β√λ` the M/M/s delay probability tends to
//! `g(β) = (1 + βΦ(β)/φ(β))^{-1}`. This module collects that limit, its
//! `1/√λ` correction, two-sided bounds valid at every finite `s`, the
//! stationary law of the limiting diffusion, and the corresponding limits for
//! abandonment and finite buffers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, unstable, Result};
use crate::exact::erlang_c;
use crate::specfun::{norm_cdf, norm_pdf, norm_sf, LN_SQRT_2PI};

/// Asymptotic parameterisation of a QED system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QedPoint {
    pub beta: f64,
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
}

impl QedPoint {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            beta,
            gamma: None,
            theta: None,
        })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        self.gamma = Some(gamma);
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return domain(format!("theta must be non-negative, got {theta}"));
        }
        self.theta = Some(theta);
        Ok(self)
    }

    /// Limiting delay probability for whichever model the point describes.
    pub fn delay_prob(&self) -> Result<f64> {
        match (self.gamma, self.theta) {
            (Some(_), Some(_)) => domain("a QED point carries either gamma or theta, not both"),
            (Some(gamma), None) => qed_finite_buffer_delay(self.beta, gamma),
            (None, Some(theta)) if theta > 0.0 => Ok(garnett_limits(self.beta, theta)?.delay_prob),
            _ => g(self.beta),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return domain(format!("beta must be positive and finite, got {beta}"));
    }
    Ok(())
}

/// `Φ(x)/φ(x)` for `x >= 0`, in log space past `x = 5` where `φ` gets small.
pub fn phi_ratio(x: f64) -> f64 {
    if x <= 5.0 {
        norm_cdf(x) / norm_pdf(x)
    } else {
        ((-norm_sf(x)).ln_1p() + 0.5 * x * x + LN_SQRT_2PI).exp()
    }
}

/// Normal hazard `k(x) = φ(x)/Φ(-x)`.
pub fn normal_hazard(x: f64) -> f64 {
    if x < 5.0 {
        return norm_pdf(x) / norm_sf(x);
    }
    // Lentz evaluation of the Mills ratio Φ(-x)/φ(x) = 1/(x + 1/(x + 2/(x + ...))).
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for j in 1..500 {
        let a = j as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// Halfin–Whitt delay function.
pub fn g(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0 / (1.0 + beta * phi_ratio(beta)))
}

/// Limiting scaled mean delay `g(β)/β`.
pub fn h(beta: f64) -> Result<f64> {
    Ok(g(beta)? / beta)
}

/// `lim √λ·B(s, λ) = φ(β)/Φ(β)`.
pub fn loss_coefficient(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0 / phi_ratio(beta))
}

/// Coefficient of the `β/√λ` correction to `g(β)`.
pub fn g_bullet(beta: f64) -> Result<f64> {
    let gv = g(beta)?;
    let r = phi_ratio(beta);
    let b2 = beta * beta;
    Ok(gv * gv * (1.0 / 3.0 + b2 / 6.0 + r * (beta / 2.0 + beta * b2 / 6.0)))
}

/// `g'(β) = -g² (R + β + β²R)` with `R = Φ/φ`, using `R' = 1 + βR`.
pub fn g_prime(beta: f64) -> Result<f64> {
    let gv = g(beta)?;
    let r = phi_ratio(beta);
    Ok(-gv * gv * (r + beta + beta * beta * r))
}

/// Infinite-server approximation `P(Pois(λ) >= s) ≈ 1 - Φ((s-λ)/√λ)`.
pub fn infinite_server_delay_approx(s: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) || !s.is_finite() {
        return domain(format!("need finite s and lambda > 0 (s={s}, lambda={lambda})"));
    }
    Ok(norm_sf((s - lambda) / lambda.sqrt()))
}

fn beta_of(s: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    let sf = s as f64;
    if sf <= lambda {
        return unstable(format!("QED quantities need s > lambda (s={s}, lambda={lambda})"));
    }
    Ok((sf - lambda) / lambda.sqrt())
}

/// `g(β) + g•(β)·β/√λ` with `β = (s-λ)/√λ`.
pub fn corrected_delay(s: u64, lambda: f64) -> Result<f64> {
    let beta = beta_of(s, lambda)?;
    Ok(g(beta)? + g_bullet(beta)? * beta / lambda.sqrt())
}

/// Two-sided bounds on `C(s, λ)` together with their shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QedBounds {
    pub alpha: f64,
    pub gamma_s: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `-(x + ln(1-x)) = x²/2 + x³/3 + ...`, computed without cancellation.
fn neg_x_plus_log1m(x: f64) -> f64 {
    if x < 0.1 {
        let mut term = x;
        let mut sum = 0.0;
        for k in 2..60 {
            term *= x;
            let add = term / k as f64;
            sum += add;
            if add < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        -(x + (-x).ln_1p())
    }
}

pub fn qed_bounds(s: u64, lambda: f64) -> Result<QedBounds> {
    beta_of(s, lambda)?;
    let sf = s as f64;
    let rho = lambda / sf;
    let x = 1.0 - rho;
    let alpha = (2.0 * sf * neg_x_plus_log1m(x)).sqrt();
    let gamma_s = x * sf.sqrt();
    let base = phi_ratio(alpha) + (2.0 / 3.0) / sf.sqrt();
    let inv_pdf = (0.5 * alpha * alpha + LN_SQRT_2PI).exp();
    let upper = 1.0 / (rho + gamma_s * base);
    let lower = 1.0 / (rho + gamma_s * (base + inv_pdf / (12.0 * sf - 1.0)));
    Ok(QedBounds {
        alpha,
        gamma_s,
        lower,
        upper,
    })
}

/// Stationary law of the Halfin–Whitt diffusion: exponential above zero,
/// truncated normal below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwStationary {
    pub beta: f64,
    /// `P(D > 0) = g(β)`
    pub p_positive: f64,
    /// `E[D⁺] = g(β)/β`
    pub mean: f64,
}

impl HwStationary {
    /// `P(D >= x | D > 0)` for `x >= 0`.
    pub fn tail_above(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return domain(format!("tail_above needs x >= 0, got {x}"));
        }
        Ok((-self.beta * x).exp())
    }

    /// `P(D <= x | D <= 0)` for `x <= 0`.
    pub fn cdf_below(&self, x: f64) -> Result<f64> {
        if !(x <= 0.0) {
            return domain(format!("cdf_below needs x <= 0, got {x}"));
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        Ok(norm_cdf(self.beta + x) / norm_cdf(self.beta))
    }

    /// Conditional density below zero, `φ(β+x)/Φ(β)`.
    pub fn density_below(&self, x: f64) -> f64 {
        norm_pdf(self.beta + x) / norm_cdf(self.beta)
    }

    /// `E[D | D <= 0] = -β - φ(β)/Φ(β)`.
    pub fn mean_below(&self) -> f64 {
        -self.beta - 1.0 / phi_ratio(self.beta)
    }
}

pub fn hw_diffusion_stationary(beta: f64) -> Result<HwStationary> {
    let p = g(beta)?;
    Ok(HwStationary {
        beta,
        p_positive: p,
        mean: p / beta,
    })
}

/// QED limits of the Erlang-A queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarnettLimits {
    pub delay_prob: f64,
    /// `lim √λ·P(abandon)`
    pub abandon_coef: f64,
}

/// Limits for `s = λ + β√λ` servers and abandonment rate `θ` (service rate 1).
/// Any real `β` is allowed since abandonment keeps the system stable.
pub fn garnett_limits(beta: f64, theta: f64) -> Result<GarnettLimits> {
    if !beta.is_finite() {
        return domain(format!("beta must be finite, got {beta}"));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return domain(format!("theta must be positive, got {theta}"));
    }
    let st = theta.sqrt();
    let upper = st * normal_hazard(beta / st);
    let delay_prob = 1.0 / (1.0 + upper / normal_hazard(-beta));
    Ok(GarnettLimits {
        delay_prob,
        abandon_coef: (upper - beta) * delay_prob,
    })
}

/// Two-fold scaling limit with `n = s + γ√s` places in the system.
pub fn qed_finite_buffer_delay(beta: f64, gamma: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    let fill = -(-beta * gamma).exp_m1();
    Ok(1.0 / (1.0 + beta * phi_ratio(beta) / fill))
}

/// Capacity scaling regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingRule {
    /// efficiency driven, `λ + β`
    Ed,
    /// quality and efficiency driven, `λ + β√λ`
    Qed,
    /// quality driven, `λ + βλ`
    Qd,
}

/// Nearest integer with ties rounded up.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Smallest integer strictly above `lambda`.
pub(crate) fn first_stable(lambda: f64) -> u64 {
    lambda.floor() as u64 + 1
}

pub fn scaled_servers(lambda: f64, beta: f64, rule: ScalingRule) -> Result<u64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    check_beta(beta)?;
    let target = match rule {
        ScalingRule::Ed => lambda + beta,
        ScalingRule::Qed => lambda + beta * lambda.sqrt(),
        ScalingRule::Qd => lambda + beta * lambda,
    };
    let s = round_half_up(target);
    Ok(if s <= lambda { first_stable(lambda) } else { s as u64 })
}

/// One row of the β = 1 bounds ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub s: u64,
    pub lambda: f64,
    pub alpha: f64,
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
    /// `(upper - lower)/C`
    pub rel_gap: f64,
    pub refined: f64,
    /// `|refined - C|/C`
    pub rel_refined_err: f64,
}

pub const LADDER: [u64; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

/// `λ` solving `s = λ + β√λ`.
pub fn load_for_servers(s: f64, beta: f64) -> f64 {
    let root = 0.5 * (-beta + (beta * beta + 4.0 * s).sqrt());
    root * root
}

pub fn bounds_row(s: u64, beta: f64) -> Result<BoundsRow> {
    let lambda = load_for_servers(s as f64, beta);
    let b = qed_bounds(s, lambda)?;
    let exact = erlang_c(s, lambda)?;
    let refined = corrected_delay(s, lambda)?;
    Ok(BoundsRow {
        s,
        lambda,
        alpha: b.alpha,
        lower: b.lower,
        exact,
        upper: b.upper,
        rel_gap: (b.upper - b.lower) / exact,
        refined,
        rel_refined_err: (refined - exact).abs() / exact,
    })
}

/// The β = 1 ladder over [`LADDER`].
pub fn bounds_table() -> Result<Vec<BoundsRow>> {
    LADDER.iter().map(|&s| bounds_row(s, 1.0)).collect()
}
