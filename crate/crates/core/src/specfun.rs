//! Scalar special functions.
//!
//! Everything downstream is built on this module: the standard normal law
//! (density, distribution, quantile), log-gamma, Poisson pmf/tails through the
//! regularized incomplete gamma function, and the Riemann zeta function at the
//! half-integer arguments needed by the Gaussian random-walk series.
//!
//! Poisson probabilities use Loader's saddle-point form
//! `pmf(k; m) = exp(-stirlerr(k) - bd0(k, m)) / sqrt(2πk)`, which stays
//! accurate for means in the millions where `m^k e^{-m} / k!` is hopeless.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{domain, numerical, Result};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Truncation policy shared by every infinite series in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

impl SeriesControl {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        let c = Self { abs_tol, max_terms };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return domain(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if self.max_terms == 0 {
            return domain("max_terms must be at least 1");
        }
        Ok(())
    }
}

/// Density and distribution function of N(0,1) at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalValues {
    pub pdf: f64,
    pub cdf: f64,
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_dist(x: f64) -> Result<NormalValues> {
    if !x.is_finite() {
        return domain(format!("normal_dist needs a finite argument, got {x}"));
    }
    Ok(NormalValues {
        pdf: norm_pdf(x),
        cdf: norm_cdf(x),
    })
}

/// Inverse of the standard normal distribution function.
///
/// Bisection on the lower tail (where `Φ` has full relative precision),
/// followed by one Newton step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("quantile level must lie in (0,1), got {p}"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (q, upper) = if p < 0.5 { (p, false) } else { (1.0 - p, true) };
    // Solve Φ(x) = q for x <= 0.
    let (mut lo, mut hi) = (-40.0_f64, 0.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let dens = norm_pdf(x);
    if dens > 0.0 {
        x -= (norm_cdf(x) - q) / dens;
    }
    Ok(if upper { -x } else { x })
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("ln_gamma needs x > 0, got {x}"));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Stirling remainder `ln Γ(n+1) - [(n + 1/2) ln n - n + ln √(2π)]`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma_pos(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m - x`, evaluated without cancellation near x = m.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `x^a e^{-x} / Γ(a+1)` for real `a >= 0`, `x > 0`.
fn pois_raw(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        return (-x).exp();
    }
    (-stirlerr(a) - bd0(a, x)).exp() / (SQRT_2PI * a.sqrt())
}

/// `ln P(Pois(mean) = k)`.
pub fn poisson_ln_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mean;
    }
    let x = k as f64;
    -stirlerr(x) - bd0(x, mean) - LN_SQRT_2PI - 0.5 * x.ln()
}

pub fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    pois_raw(k as f64, mean)
}

/// Regularized incomplete gamma pair `(P(a,x), Q(a,x))`.
///
/// Series for `P` below `x = a + 1`, Lentz continued fraction for `Q` above;
/// the complement is formed only on the side where it cannot cancel.
pub fn regularized_gamma(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) || !(x >= 0.0 && x.is_finite()) {
        return domain(format!("regularized_gamma needs a > 0, x >= 0 (a={a}, x={x})"));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let pre = pois_raw(a, x);
    let max_iter = 200 + (60.0 * a.max(x).sqrt()) as usize;
    if x < a + 1.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 1.0;
        loop {
            term *= x / (a + n);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            n += 1.0;
            if n as usize > max_iter {
                return numerical(format!("incomplete gamma series stalled (a={a}, x={x})"));
            }
        }
        let p = (pre * sum).min(1.0);
        Ok((p, 1.0 - p))
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut i = 1usize;
        loop {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
            i += 1;
            if i > max_iter {
                return numerical(format!("incomplete gamma fraction stalled (a={a}, x={x})"));
            }
        }
        let q = (a * pre * h).clamp(0.0, 1.0);
        Ok((1.0 - q, q))
    }
}

/// Upper tail probabilities of a Poisson count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonTail {
    /// `P(Pois(mean) >= c)`
    pub p_geq: f64,
    /// `P(Pois(mean) > c)`
    pub p_gt: f64,
}

pub fn poisson_tail(mean: f64, c: u64) -> Result<PoissonTail> {
    if !(mean > 0.0 && mean.is_finite()) {
        return domain(format!("Poisson mean must be positive, got {mean}"));
    }
    let p_geq = if c == 0 {
        1.0
    } else {
        regularized_gamma(c as f64, mean)?.0
    };
    let p_gt = regularized_gamma(c as f64 + 1.0, mean)?.0;
    Ok(PoissonTail { p_geq, p_gt })
}

/// Riemann ζ for real `s > 0`, `s != 1`.
///
/// Borwein's accelerated alternating series for the Dirichlet η function,
/// `ζ(s) = η(s) / (1 - 2^{1-s})`; for large `s` the Dirichlet sum is used directly.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) || s == 1.0 {
        return domain(format!("zeta is implemented for real s > 0, s != 1 (got {s})"));
    }
    if s >= 30.0 {
        return Ok((1..=12).rev().map(|k| (k as f64).powf(-s)).sum());
    }
    const N: usize = 40;
    let nf = N as f64;
    let mut d = [0.0_f64; N + 1];
    let mut t = 1.0 / nf;
    let mut acc = t;
    d[0] = nf * acc;
    for (i, slot) in d.iter_mut().enumerate().skip(1) {
        let fi = i as f64;
        t *= 4.0 * (nf + fi - 1.0) * (nf - fi + 1.0) / ((2.0 * fi) * (2.0 * fi - 1.0));
        acc += t;
        *slot = nf * acc;
    }
    let dn = d[N];
    let mut sum = 0.0;
    for (k, dk) in d.iter().take(N).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (dk - dn) / ((k + 1) as f64).powf(s);
    }
    let eta = -sum / dn;
    Ok(eta / (1.0 - 2f64.powf(1.0 - s)))
}

/// Which half-integer family a call to [`zeta_half`] addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZetaBranch {
    /// `ζ(1/2 - l)`
    Plus,
    /// `ζ(-1/2 - l)`
    Minus,
}

/// Sign of `cos(π (m + 1/2) / 2)`.
pub(crate) fn half_cos_sign(m: u64) -> f64 {
    match m % 4 {
        0 | 3 => 1.0,
        _ => -1.0,
    }
}

/// `ζ(1/2 - l)` or `ζ(-1/2 - l)` through the functional equation
/// `ζ(1-s) = 2 (2π)^{-s} cos(πs/2) Γ(s) ζ(s)` with `s = m + 1/2`.
pub fn zeta_half(l: i64, branch: ZetaBranch) -> Result<f64> {
    if l < 0 {
        return domain(format!("zeta_half needs l >= 0, got {l}"));
    }
    let m = match branch {
        ZetaBranch::Plus => l as u64,
        ZetaBranch::Minus => l as u64 + 1,
    };
    if m == 0 {
        return zeta(0.5);
    }
    // Γ(m + 1/2) / (2π)^{m + 1/2}, built up without overflow.
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut scaled_gamma = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=m {
        scaled_gamma *= (k as f64 - 0.5) / two_pi;
    }
    let s = m as f64 + 0.5;
    Ok(half_cos_sign(m) * std::f64::consts::SQRT_2 * scaled_gamma * zeta(s)?)
}
