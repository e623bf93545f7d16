//! Capacity dimensioning: delay targets, cost minimisation and hedging
//! against an uncertain arrival rate.
//!
//! Constraint rules round up (the target must be met); cost rules round to
//! the nearest integer with ties going up. Every solution reports the exact
//! Erlang-C measure or cost at the chosen `s` next to what the rule predicted.

use serde::{Deserialize, Serialize};

use crate::error::{domain, numerical, Result};
use crate::exact::{erlang_b, erlang_c, erlang_c_real};
use crate::qed::{first_stable, g, g_bullet, g_prime, round_half_up};
use crate::specfun::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    DelayProb { epsilon: f64 },
    CostRatio { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaffingProblem {
    pub lambda: f64,
    pub target: Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Exact,
    Qed,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaffingSolution {
    pub servers: u64,
    pub rule: Rule,
    pub beta_used: Option<f64>,
    /// What the rule's own approximation says about `servers`.
    pub predicted: f64,
    /// Exact delay probability or cost at `servers`.
    pub achieved: f64,
}

impl StaffingProblem {
    pub fn solve(&self, rule: Rule) -> Result<StaffingSolution> {
        match (self.target, rule) {
            (Target::DelayProb { epsilon }, Rule::Exact) => staff_exact(self.lambda, epsilon),
            (Target::DelayProb { epsilon }, Rule::Qed) => staff_qed(self.lambda, epsilon),
            (Target::DelayProb { .. }, Rule::Refined) => {
                domain("the refined rule is defined for cost targets only")
            }
            (Target::CostRatio { r }, Rule::Exact) => cost_exact(self.lambda, r),
            (Target::CostRatio { r }, Rule::Qed) => cost_qed(self.lambda, r),
            (Target::CostRatio { r }, Rule::Refined) => cost_refined(self.lambda, r),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0,1), got {epsilon}"));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("cost ratio r must be positive, got {r}"));
    }
    Ok(())
}

/// Ceiling that ignores round-off just above an integer.
pub fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9 * x.abs().max(1.0)).ceil()
}

/// Smallest `s > λ` with `C(s, λ) <= ε`.
pub fn staff_exact(lambda: f64, epsilon: f64) -> Result<StaffingSolution> {
    check_lambda(lambda)?;
    check_epsilon(epsilon)?;
    let lo = first_stable(lambda);
    // Jump-start at the square-root guess, then walk to the boundary.
    let guess = lambda + beta_for_delay_target(epsilon)? * lambda.sqrt();
    let mut s = (guess.ceil() as u64).max(lo);
    let mut c = erlang_c(s, lambda)?;
    if c <= epsilon {
        while s > lo {
            let below = erlang_c(s - 1, lambda)?;
            if below > epsilon {
                break;
            }
            s -= 1;
            c = below;
        }
    } else {
        while c > epsilon {
            s += 1;
            c = erlang_c(s, lambda)?;
        }
    }
    Ok(StaffingSolution {
        servers: s,
        rule: Rule::Exact,
        beta_used: None,
        predicted: c,
        achieved: c,
    })
}

/// `β*` with `g(β*) = ε`.
pub fn beta_for_delay_target(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (mut lo, mut hi) = (0.5_f64, 1.0_f64);
    while g(lo)? <= epsilon {
        lo *= 0.5;
        if lo < 1e-300 {
            return numerical(format!("no bracket for g(beta) = {epsilon}"));
        }
    }
    while g(hi)? >= epsilon {
        hi *= 2.0;
        if hi > 1e3 {
            return numerical(format!("no bracket for g(beta) = {epsilon}"));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `s = ⌈λ + β*(ε)√λ⌉`.
pub fn staff_qed(lambda: f64, epsilon: f64) -> Result<StaffingSolution> {
    check_lambda(lambda)?;
    let beta = beta_for_delay_target(epsilon)?;
    let raw = ceil_tol(lambda + beta * lambda.sqrt());
    let s = if raw <= lambda { first_stable(lambda) } else { raw as u64 };
    let beta_s = (s as f64 - lambda) / lambda.sqrt();
    Ok(StaffingSolution {
        servers: s,
        rule: Rule::Qed,
        beta_used: Some(beta),
        predicted: g(beta_s)?,
        achieved: erlang_c(s, lambda)?,
    })
}

/// `K(s) = r(s-λ) + λ C(s,λ)/(s-λ)`: capacity cost plus `λ·E[delay]`.
pub fn cost(s: u64, lambda: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    let c = erlang_c(s, lambda)?;
    let d = s as f64 - lambda;
    Ok(r * d + lambda * c / d)
}

/// [`cost`] at real `s`, through the integral form of Erlang C.
pub fn cost_real(s: f64, lambda: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    let c = erlang_c_real(s, lambda)?;
    let d = s - lambda;
    Ok(r * d + lambda * c / d)
}

/// Upper end of the exhaustive window, `⌈λ + 10√λ + 10⌉`.
fn search_top(lambda: f64) -> u64 {
    (lambda + 10.0 * lambda.sqrt() + 10.0).ceil() as u64
}

/// Costs `K(s)` for every `s` from the first stable level to the window top.
pub fn cost_profile(lambda: f64, r: f64) -> Result<Vec<(u64, f64)>> {
    check_lambda(lambda)?;
    check_r(r)?;
    let lo = first_stable(lambda);
    let mut b = erlang_b(lo, lambda)?;
    let mut out = Vec::new();
    for s in lo..=search_top(lambda) {
        if s > lo {
            b = lambda * b / (s as f64 + lambda * b);
        }
        let sf = s as f64;
        let rho = lambda / sf;
        let c = 1.0 / (rho + (1.0 - rho) / b);
        out.push((s, r * (sf - lambda) + lambda * c / (sf - lambda)));
    }
    Ok(out)
}

/// Exhaustive minimiser of `K(s)`.
pub fn cost_exact(lambda: f64, r: f64) -> Result<StaffingSolution> {
    let (s, k) = cost_profile(lambda, r)?
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("window is never empty");
    Ok(StaffingSolution {
        servers: s,
        rule: Rule::Exact,
        beta_used: None,
        predicted: k,
        achieved: k,
    })
}

/// Scaled asymptotic cost `K*(β) = rβ + g(β)/β`.
pub fn k_star(beta: f64, r: f64) -> Result<f64> {
    Ok(r * beta + g(beta)? / beta)
}

/// `K*'(β) = r + (β g'(β) - g(β))/β²`.
pub fn k_star_prime(beta: f64, r: f64) -> Result<f64> {
    Ok(r + (beta * g_prime(beta)? - g(beta)?) / (beta * beta))
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..500 {
        if (b - a).abs() <= tol * (1.0 + c.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Minimiser of `K*`, found by golden section on a bracket where `K*'`
/// changes sign.
pub fn beta_for_cost(r: f64) -> Result<f64> {
    check_r(r)?;
    let (mut lo, mut hi) = (0.5_f64, 1.0_f64);
    while k_star_prime(lo, r)? >= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return numerical(format!("no bracket for the cost minimum at r={r}"));
        }
    }
    while k_star_prime(hi, r)? <= 0.0 {
        hi *= 2.0;
        if hi > 40.0 {
            return numerical(format!("no bracket for the cost minimum at r={r}"));
        }
    }
    golden_min(|b| k_star(b, r), lo, hi, 1e-12)
}

fn nearest_stable(lambda: f64, x: f64) -> u64 {
    let s = round_half_up(x);
    if s <= lambda {
        first_stable(lambda)
    } else {
        s as u64
    }
}

/// `s = [λ + β*√λ]` with `β*` minimising `K*`.
pub fn cost_qed(lambda: f64, r: f64) -> Result<StaffingSolution> {
    check_lambda(lambda)?;
    let beta = beta_for_cost(r)?;
    let s = nearest_stable(lambda, lambda + beta * lambda.sqrt());
    let beta_s = (s as f64 - lambda) / lambda.sqrt();
    Ok(StaffingSolution {
        servers: s,
        rule: Rule::Qed,
        beta_used: Some(beta),
        predicted: lambda.sqrt() * k_star(beta_s, r)?,
        achieved: cost(s, lambda, r)?,
    })
}

fn central<F: Fn(f64) -> Result<f64>>(f: &F, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Central difference at steps 1e-5 and 1e-6, required to agree to 1e-4.
fn checked_derivative<F: Fn(f64) -> Result<f64>>(f: F, x: f64, what: &str) -> Result<f64> {
    let coarse = central(&f, x, 1e-5)?;
    let fine = central(&f, x, 1e-6)?;
    let scale = coarse.abs().max(fine.abs()).max(1e-8);
    if (coarse - fine).abs() > 1e-4 * scale {
        return numerical(format!(
            "{what} at {x}: step 1e-5 gives {coarse}, step 1e-6 gives {fine}"
        ));
    }
    Ok(coarse)
}

/// First-order correction to `β*` for finite `λ`.
///
/// Adding the `g•(β)β/√λ` term to `C` turns the scaled cost into
/// `K*(β) + g•(β)/√λ`; one Newton step from `β*` moves the minimiser by
/// `β•/√λ` with `β• = -g•'(β*)/K*''(β*)`.
pub fn beta_bullet(r: f64) -> Result<(f64, f64)> {
    let beta = beta_for_cost(r)?;
    let gb_prime = checked_derivative(g_bullet, beta, "g• derivative")?;
    let k2 = checked_derivative(|b| k_star_prime(b, r), beta, "K* second derivative")?;
    if !(k2 > 0.0) {
        return numerical(format!("K*'' is not positive at beta*={beta} (got {k2})"));
    }
    Ok((beta, -gb_prime / k2))
}

/// `s• = [λ + (β* + β•/√λ)√λ]`.
pub fn cost_refined(lambda: f64, r: f64) -> Result<StaffingSolution> {
    check_lambda(lambda)?;
    let (beta, bullet) = beta_bullet(r)?;
    let refined_beta = beta + bullet / lambda.sqrt();
    let s = nearest_stable(lambda, lambda + refined_beta * lambda.sqrt());
    let beta_s = (s as f64 - lambda) / lambda.sqrt();
    let c_approx = g(beta_s)? + g_bullet(beta_s)? * beta_s / lambda.sqrt();
    Ok(StaffingSolution {
        servers: s,
        rule: Rule::Refined,
        beta_used: Some(refined_beta),
        predicted: lambda.sqrt() * (r * beta_s + c_approx / beta_s),
        achieved: cost(s, lambda, r)?,
    })
}

/// Continuous relaxation of the cost problem (real `s`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousGap {
    pub s_opt: f64,
    pub k_opt: f64,
    pub s_qed: f64,
    pub gap_qed: f64,
    pub s_refined: f64,
    pub gap_refined: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityGap {
    pub lambda: f64,
    pub r: f64,
    pub s_opt: u64,
    pub k_opt: f64,
    pub s_qed: u64,
    pub gap_qed: f64,
    pub s_refined: u64,
    pub gap_refined: f64,
    pub continuous: ContinuousGap,
}

/// Cost penalty of the square-root and refined rules against the exhaustive
/// optimum, both on integers and on the real-`s` relaxation (where the
/// rounding to integers no longer hides the `O(1/√λ)` improvement).
pub fn optimality_gap(lambda: f64, r: f64) -> Result<OptimalityGap> {
    let exact = cost_exact(lambda, r)?;
    let qed = cost_qed(lambda, r)?;
    let refined = cost_refined(lambda, r)?;
    let (beta, bullet) = beta_bullet(r)?;
    let sq = lambda.sqrt();

    let s_star = exact.servers as f64;
    let lo = (s_star - 1.0).max(lambda + 1e-6 * sq.max(1e-3));
    let s_opt = golden_min(|s| cost_real(s, lambda, r), lo, s_star + 1.0, 1e-10)?;
    let k_opt = cost_real(s_opt, lambda, r)?;
    let s_qed = lambda + beta * sq;
    let s_refined = lambda + beta * sq + bullet;
    let continuous = ContinuousGap {
        s_opt,
        k_opt,
        s_qed,
        gap_qed: (cost_real(s_qed, lambda, r)? - k_opt).max(0.0),
        s_refined,
        gap_refined: (cost_real(s_refined, lambda, r)? - k_opt).max(0.0),
    };
    Ok(OptimalityGap {
        lambda,
        r,
        s_opt: exact.servers,
        k_opt: exact.achieved,
        s_qed: qed.servers,
        gap_qed: qed.achieved - exact.achieved,
        s_refined: refined.servers,
        gap_refined: refined.achieved - exact.achieved,
        continuous,
    })
}

/// `s = ⌈λ̂ + β√(σ² + λ̂)⌉` with `β = Φ^{-1}(1-ε)`, for a rate estimate `λ̂`
/// with standard error `σ`.
pub fn staff_uncertain(lambda_hat: f64, sigma: f64, epsilon: f64) -> Result<u64> {
    check_lambda(lambda_hat)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return domain(format!("sigma must be non-negative, got {sigma}"));
    }
    check_epsilon(epsilon)?;
    let beta = normal_quantile(1.0 - epsilon)?;
    let s = ceil_tol(lambda_hat + beta * (sigma * sigma + lambda_hat).sqrt());
    Ok(s.max(1.0) as u64)
}
