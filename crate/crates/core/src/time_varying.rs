//! Offered load and staffing schedules for time-varying arrival rates.
//!
//! The offered load `R(t)` is the mean occupancy of the infinite-server
//! system fed by the same arrivals, `R(t) = ∫₀^∞ λ(t-u) e^{-μu} du`, which
//! solves `R' = λ(t) - μR`. PSA staffs each instant as a stationary Erlang-C
//! system at rate `λ(t)`; MOL applies the square-root rule to `R(t)`.
//!
//! Schedules are piecewise constant on their grid. A level drop takes effect
//! as busy servers finish their current job; increases are immediate.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dimensioning::{beta_for_delay_target, ceil_tol, staff_exact};
use crate::error::{config, domain, numerical, Result};

/// Arrival-rate function `λ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFunction {
    Constant { level: f64 },
    /// `a + b sin(ωt + phase)`
    Sinusoid { base: f64, amplitude: f64, omega: f64, phase: f64 },
    /// `levels[i]` on `[breakpoints[i], breakpoints[i+1])`, extended flat at both ends.
    PiecewiseConstant { breakpoints: Vec<f64>, levels: Vec<f64> },
    /// Linear interpolation through `(times[i], values[i])`, flat outside.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1]) && xs.iter().all(|x| x.is_finite())
}

impl RateFunction {
    pub fn sinusoid(base: f64, amplitude: f64, period: f64, phase: f64) -> Self {
        RateFunction::Sinusoid {
            base,
            amplitude,
            omega: 2.0 * PI / period,
            phase,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Constant { level } => {
                if !(*level >= 0.0 && level.is_finite()) {
                    return domain(format!("constant rate must be non-negative, got {level}"));
                }
            }
            RateFunction::Sinusoid { base, amplitude, omega, phase } => {
                if ![base, amplitude, omega, phase].iter().all(|v| v.is_finite()) {
                    return domain("sinusoid parameters must be finite");
                }
                if *base < amplitude.abs() {
                    return domain(format!("sinusoid needs base >= |amplitude| (a={base}, b={amplitude})"));
                }
                if !(*omega > 0.0) {
                    return domain(format!("sinusoid period must be positive (omega={omega})"));
                }
            }
            RateFunction::PiecewiseConstant { breakpoints, levels } => {
                if breakpoints.is_empty() || breakpoints.len() != levels.len() {
                    return domain("piecewise-constant rate needs one level per breakpoint");
                }
                if !strictly_increasing(breakpoints) {
                    return domain("breakpoints must be strictly increasing");
                }
                if let Some(l) = levels.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                    return domain(format!("negative or non-finite rate level {l}"));
                }
            }
            RateFunction::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return domain("sampled rate needs one value per time");
                }
                if !strictly_increasing(times) {
                    return domain("sample times must be strictly increasing");
                }
                if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return domain(format!("negative or non-finite sampled rate {v}"));
                }
            }
        }
        Ok(())
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            RateFunction::Constant { level } => *level,
            RateFunction::Sinusoid { base, amplitude, omega, phase } => base + amplitude * (omega * t + phase).sin(),
            RateFunction::PiecewiseConstant { breakpoints, levels } => {
                let i = breakpoints.partition_point(|&b| b <= t);
                levels[i.saturating_sub(1)]
            }
            RateFunction::Sampled { times, values } => {
                let i = times.partition_point(|&x| x <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// The rate delayed by `delta`: `t ↦ λ(t - delta)`.
    pub fn shifted(&self, delta: f64) -> Self {
        match self {
            RateFunction::Constant { .. } => self.clone(),
            RateFunction::Sinusoid { base, amplitude, omega, phase } => RateFunction::Sinusoid {
                base: *base,
                amplitude: *amplitude,
                omega: *omega,
                phase: phase - omega * delta,
            },
            RateFunction::PiecewiseConstant { breakpoints, levels } => RateFunction::PiecewiseConstant {
                breakpoints: breakpoints.iter().map(|b| b + delta).collect(),
                levels: levels.clone(),
            },
            RateFunction::Sampled { times, values } => RateFunction::Sampled {
                times: times.iter().map(|t| t + delta).collect(),
                values: values.clone(),
            },
        }
    }

    /// Points in `(t1, t2)` where `λ` jumps or has a kink.
    pub fn breakpoints_in(&self, t1: f64, t2: f64) -> Vec<f64> {
        let pts: &[f64] = match self {
            RateFunction::PiecewiseConstant { breakpoints, .. } => breakpoints,
            RateFunction::Sampled { times, .. } => times,
            _ => &[],
        };
        pts.iter().copied().filter(|&x| x > t1 && x < t2).collect()
    }

    /// `sup λ` over `[t1, t2]`.
    pub fn max_on(&self, t1: f64, t2: f64) -> f64 {
        let mut m = self.rate(t1).max(self.rate(t2));
        match self {
            RateFunction::Constant { .. } => {}
            RateFunction::Sinusoid { omega, phase, .. } => {
                let (th1, th2) = (omega * t1 + phase, omega * t2 + phase);
                let mut k = ((th1 - FRAC_PI_2) / PI).ceil();
                while FRAC_PI_2 + k * PI <= th2 {
                    let t = (FRAC_PI_2 + k * PI - phase) / omega;
                    m = m.max(self.rate(t));
                    k += 1.0;
                    if th2 - th1 > 4.0 * PI {
                        break;
                    }
                }
            }
            RateFunction::PiecewiseConstant { .. } | RateFunction::Sampled { .. } => {
                for b in self.breakpoints_in(t1, t2) {
                    m = m.max(self.rate(b));
                }
            }
        }
        m
    }

    /// `∫_{t1}^{t2} λ(t) dt`.
    pub fn integral(&self, t1: f64, t2: f64) -> f64 {
        match self {
            RateFunction::Constant { level } => level * (t2 - t1),
            RateFunction::Sinusoid { base, amplitude, omega, phase } => {
                base * (t2 - t1) - amplitude / omega * ((omega * t2 + phase).cos() - (omega * t1 + phase).cos())
            }
            RateFunction::PiecewiseConstant { .. } | RateFunction::Sampled { .. } => {
                // Both are linear between consecutive breakpoints.
                let mut knots = vec![t1];
                knots.extend(self.breakpoints_in(t1, t2));
                knots.push(t2);
                let linear = matches!(self, RateFunction::Sampled { .. });
                knots
                    .windows(2)
                    .map(|w| {
                        if linear {
                            0.5 * (self.rate(w[0]) + self.rate(w[1])) * (w[1] - w[0])
                        } else {
                            self.rate(w[0]) * (w[1] - w[0])
                        }
                    })
                    .sum()
            }
        }
    }

    /// Parse `constant:L`, `sinusoid:A,B,PERIOD[,PHASE]`, `pwc:t0,l0;t1,l1;...`
    /// or `csv:PATH` (two columns `time,rate`, optional header).
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| crate::QedError::Config(format!("rate spec '{text}' lacks a 'kind:' prefix")))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| crate::QedError::Config(format!("'{s}' is not a number in rate spec '{text}'")))
        };
        let rate = match kind.trim() {
            "constant" => RateFunction::Constant { level: num(body)? },
            "sinusoid" => {
                let parts: Vec<f64> = body.split(',').map(num).collect::<Result<_>>()?;
                match parts.as_slice() {
                    [a, b, p] => RateFunction::sinusoid(*a, *b, *p, 0.0),
                    [a, b, p, ph] => RateFunction::sinusoid(*a, *b, *p, *ph),
                    _ => return config(format!("sinusoid expects A,B,PERIOD[,PHASE], got '{body}'")),
                }
            }
            "pwc" => {
                let mut breakpoints = Vec::new();
                let mut levels = Vec::new();
                for pair in body.split(';').filter(|p| !p.trim().is_empty()) {
                    let Some((t, l)) = pair.split_once(',') else {
                        return config(format!("pwc entry '{pair}' is not 'time,level'"));
                    };
                    breakpoints.push(num(t)?);
                    levels.push(num(l)?);
                }
                RateFunction::PiecewiseConstant { breakpoints, levels }
            }
            "csv" => Self::from_csv(Path::new(body.trim()))?,
            other => return config(format!("unknown rate kind '{other}'")),
        };
        rate.validate()?;
        Ok(rate)
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| crate::QedError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| crate::QedError::Config(format!("{}: {e}", path.display())))?;
            if rec.len() < 2 {
                return config(format!("{} line {}: expected two columns", path.display(), i + 1));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(t), Ok(v)) => {
                    times.push(t);
                    values.push(v);
                }
                _ if i == 0 => continue, // header
                _ => return config(format!("{} line {}: non-numeric entry", path.display(), i + 1)),
            }
        }
        let rate = RateFunction::Sampled { times, values };
        rate.validate()?;
        Ok(rate)
    }
}

/// How to start the offered-load ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    /// Value of the convolution with the rate extended into the past.
    Stationary,
    Value(f64),
}

/// `R(t₀)` when the rate is taken as defined before `t₀`.
pub fn stationary_load(rate: &RateFunction, mu: f64, t0: f64) -> f64 {
    match rate {
        RateFunction::Sinusoid { base, amplitude, omega, phase } => {
            let th = omega * t0 + phase;
            base / mu + amplitude * (mu * th.sin() - omega * th.cos()) / (mu * mu + omega * omega)
        }
        // Constant history before the first point.
        _ => rate.rate(t0) / mu,
    }
}

/// Offered load sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferedLoad {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

fn rk4_step(rate: impl Fn(f64) -> f64, mu: f64, t: f64, r: f64, h: f64) -> f64 {
    let f = |t: f64, r: f64| rate(t) - mu * r;
    let k1 = f(t, r);
    let k2 = f(t + 0.5 * h, r + 0.5 * h * k1);
    let k3 = f(t + 0.5 * h, r + 0.5 * h * k2);
    let k4 = f(t + h, r + h * k3);
    r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate across `[t1, t2]` in `n` equal RK4 steps per smooth piece.
fn advance(rate: &RateFunction, mu: f64, t1: f64, t2: f64, r: f64, n: usize) -> f64 {
    let mut knots = vec![t1];
    knots.extend(rate.breakpoints_in(t1, t2));
    knots.push(t2);
    let mut r = r;
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / n as f64;
        // Inside a piece use the left limit so a jump at w[1] is not seen.
        let level = rate.rate(0.5 * (w[0] + w[1]));
        let local = |t: f64| match rate {
            RateFunction::PiecewiseConstant { .. } => level,
            _ => rate.rate(t),
        };
        for i in 0..n {
            r = rk4_step(local, mu, w[0] + i as f64 * h, r, h);
        }
    }
    r
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("service rate mu must be positive, got {mu}"));
    }
    Ok(())
}

/// `R` at the sorted `times`, started from `initial` at `times[0]`.
///
/// Each interval is integrated with RK4 and the number of substeps doubled
/// until two successive refinements agree to 1e-10 relative, which keeps the
/// result well inside the 1e-8 step-doubling tolerance.
pub fn offered_load_at(rate: &RateFunction, mu: f64, times: &[f64], initial: Initial) -> Result<Vec<f64>> {
    rate.validate()?;
    check_mu(mu)?;
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if !strictly_increasing(times) {
        return domain("offered-load times must be strictly increasing");
    }
    let r0 = match initial {
        Initial::Stationary => stationary_load(rate, mu, times[0]),
        Initial::Value(v) => {
            if !(v >= 0.0 && v.is_finite()) {
                return domain(format!("initial offered load must be non-negative, got {v}"));
            }
            v
        }
    };
    let scale = rate.max_on(times[0], *times.last().unwrap()) / mu + r0;
    let mut out = Vec::with_capacity(times.len());
    out.push(r0);
    let mut r = r0;
    for w in times.windows(2) {
        // Start near one step per unit of μ·h, at least one per interval.
        let mut n = ((mu * (w[1] - w[0])).ceil() as usize).clamp(1, 1 << 20);
        let mut coarse = advance(rate, mu, w[0], w[1], r, n);
        loop {
            n *= 2;
            let fine = advance(rate, mu, w[0], w[1], r, n);
            if (fine - coarse).abs() <= 1e-10 * fine.abs().max(1e-3 * scale).max(1e-300) {
                coarse = fine;
                break;
            }
            if n > 1 << 22 {
                return numerical(format!("offered load did not settle on [{}, {}]", w[0], w[1]));
            }
            coarse = fine;
        }
        r = coarse.max(0.0);
        out.push(r);
    }
    Ok(out)
}

/// `R` on `0, step, 2·step, …, horizon`.
pub fn offered_load(
    rate: &RateFunction,
    mu: f64,
    horizon: f64,
    grid_step: f64,
    initial: Initial,
) -> Result<OfferedLoad> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return domain(format!("grid_step must be positive, got {grid_step}"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let times = uniform_grid(0.0, horizon, grid_step);
    let values = offered_load_at(rate, mu, &times, initial)?;
    Ok(OfferedLoad { times, values })
}

/// `start, start + step, …` up to and including `end`.
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step - 1e-9).ceil().max(0.0) as usize;
    let mut g: Vec<f64> = (0..n).map(|i| start + i as f64 * step).collect();
    g.push(end);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMethod {
    Psa,
    Mol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaffingSchedule {
    pub grid: Vec<f64>,
    /// `levels[i]` applies on `[grid[i], grid[i+1])`.
    pub levels: Vec<u64>,
    pub method: ScheduleMethod,
    pub epsilon: f64,
    pub mu: f64,
}

impl StaffingSchedule {
    /// Constant schedule, used for stationary models.
    pub fn constant(level: u64, mu: f64) -> Self {
        Self {
            grid: vec![0.0],
            levels: vec![level],
            method: ScheduleMethod::Mol,
            epsilon: f64::NAN,
            mu,
        }
    }

    pub fn level_at(&self, t: f64) -> u64 {
        let i = self.grid.partition_point(|&g| g <= t);
        self.levels[i.saturating_sub(1)]
    }

    /// Index of the cell containing `t`.
    pub fn cell(&self, t: f64) -> usize {
        self.grid.partition_point(|&g| g <= t).saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() || self.grid.len() != self.levels.len() {
            return config("schedule needs one level per grid point");
        }
        if !strictly_increasing(&self.grid) {
            return config("schedule grid must be strictly increasing");
        }
        if self.levels.contains(&0) {
            return config("schedule levels must be positive");
        }
        check_mu(self.mu)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || !strictly_increasing(grid) {
        return domain("schedule grid must be non-empty and strictly increasing");
    }
    Ok(())
}

/// Pointwise-stationary staffing: `staff_exact(λ(t)/μ, ε)` at each grid time.
pub fn psa_schedule(rate: &RateFunction, mu: f64, epsilon: f64, grid: &[f64]) -> Result<StaffingSchedule> {
    rate.validate()?;
    check_mu(mu)?;
    check_grid(grid)?;
    let levels = grid
        .iter()
        .map(|&t| {
            let load = rate.rate(t) / mu;
            if load > 0.0 {
                Ok(staff_exact(load, epsilon)?.servers)
            } else {
                Ok(1)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StaffingSchedule {
        grid: grid.to_vec(),
        levels,
        method: ScheduleMethod::Psa,
        epsilon,
        mu,
    })
}

/// Modified-offered-load staffing: `⌈R(t) + β*(ε)√R(t)⌉`, at least one.
pub fn mol_schedule(rate: &RateFunction, mu: f64, epsilon: f64, grid: &[f64]) -> Result<StaffingSchedule> {
    check_grid(grid)?;
    let beta = beta_for_delay_target(epsilon)?;
    let load = offered_load_at(rate, mu, grid, Initial::Stationary)?;
    let levels = load
        .iter()
        .map(|&r| (ceil_tol(r + beta * r.sqrt()).max(1.0)) as u64)
        .collect();
    Ok(StaffingSchedule {
        grid: grid.to_vec(),
        levels,
        method: ScheduleMethod::Mol,
        epsilon,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimensioning::staff_qed;
    use crate::qed::g;

    #[test]
    fn constant_load_from_zero() {
        let rate = RateFunction::Constant { level: 5.0 };
        let load = offered_load(&rate, 0.5, 20.0, 0.25, Initial::Value(0.0)).unwrap();
        for (t, r) in load.times.iter().zip(&load.values) {
            let want = 10.0 * (1.0 - (-0.5 * t).exp());
            assert!((r - want).abs() <= 1e-9 * want.max(1e-9), "t={t}: {r} vs {want}");
        }
        let late = offered_load(&rate, 0.5, 80.0, 1.0, Initial::Value(0.0)).unwrap();
        assert!((late.values.last().unwrap() - 10.0).abs() < 1e-7);
    }

    #[test]
    fn sinusoid_matches_closed_form() {
        let rate = RateFunction::sinusoid(30.0, 20.0, 24.0, 0.0);
        let RateFunction::Sinusoid { omega, .. } = rate else { unreachable!() };
        let load = offered_load(&rate, 1.0, 48.0, 0.5, Initial::Stationary).unwrap();
        for (t, r) in load.times.iter().zip(&load.values) {
            let want = 30.0 + 20.0 * ((omega * t).sin() - omega * (omega * t).cos()) / (1.0 + omega * omega);
            assert!((r - want).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn step_doubling_is_stable() {
        let rate = RateFunction::sinusoid(30.0, 20.0, 24.0, 0.3);
        let a = offered_load(&rate, 0.5, 24.0, 0.5, Initial::Value(3.0)).unwrap();
        let b = offered_load(&rate, 0.5, 24.0, 0.25, Initial::Value(3.0)).unwrap();
        for (i, r) in a.values.iter().enumerate() {
            let other = b.values[2 * i];
            assert!((r - other).abs() <= 1e-8 * r.abs());
        }
    }

    #[test]
    fn pwc_load_is_exact_across_jumps() {
        let rate = RateFunction::parse("pwc:0,10;2.3,4;5,0").unwrap();
        let load = offered_load_at(&rate, 1.0, &[0.0, 4.0, 6.0], Initial::Stationary).unwrap();
        // From 10 at t=0: relax toward 4 after t=2.3, toward 0 after t=5.
        let at23 = 10.0;
        let at4 = 4.0 + (at23 - 4.0) * (-(4.0 - 2.3f64)).exp();
        let at5 = 4.0 + (at23 - 4.0) * (-(5.0 - 2.3f64)).exp();
        let at6 = at5 * (-1.0f64).exp();
        assert!((load[1] - at4).abs() < 1e-9 && (load[2] - at6).abs() < 1e-9);
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!(RateFunction::parse("constant:4").unwrap(), RateFunction::Constant { level: 4.0 });
        let s = RateFunction::parse("sinusoid:30,20,24").unwrap();
        assert!((s.rate(6.0) - 50.0).abs() < 1e-12);
        assert!(RateFunction::parse("sinusoid:10,20,24").is_err());
        assert!(RateFunction::parse("constant:-1").is_err());
        assert!(RateFunction::parse("weird:1").is_err());
        assert!(RateFunction::parse("pwc:1,2;0,3").is_err());
        assert!(RateFunction::parse("nonsense").is_err());
    }

    #[test]
    fn csv_rates() {
        let dir = std::env::temp_dir().join(format!("qed_rate_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rate.csv");
        std::fs::write(&path, "time,rate\n0,1\n2,5\n4,5\n").unwrap();
        let r = RateFunction::parse(&format!("csv:{}", path.display())).unwrap();
        assert!((r.rate(1.0) - 3.0).abs() < 1e-15);
        assert!((r.integral(0.0, 4.0) - 16.0).abs() < 1e-12);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn sinusoid_max_and_integral() {
        let s = RateFunction::sinusoid(30.0, 20.0, 24.0, 0.0);
        assert!((s.max_on(0.0, 24.0) - 50.0).abs() < 1e-12);
        assert!((s.max_on(12.0, 18.0) - 30.0).abs() < 1e-9);
        assert!((s.integral(0.0, 24.0) - 720.0).abs() < 1e-9);
        let later = s.shifted(5.0);
        assert!((later.rate(7.0) - s.rate(2.0)).abs() < 1e-12);
        let p = RateFunction::parse("pwc:0,1;3,2").unwrap().shifted(1.0);
        assert_eq!((p.rate(3.5), p.rate(4.0)), (1.0, 2.0));
    }

    #[test]
    fn constant_rate_schedules() {
        let rate = RateFunction::Constant { level: 100.0 };
        let grid = uniform_grid(0.0, 10.0, 1.0);
        let eps = g(1.0).unwrap();
        let mol = mol_schedule(&rate, 1.0, eps, &grid).unwrap();
        assert!(mol.levels.iter().all(|&l| l == 110));
        assert_eq!(mol.levels[0], staff_qed(100.0, eps).unwrap().servers);
        let psa = psa_schedule(&rate, 1.0, 0.2, &grid).unwrap();
        let want = staff_exact(100.0, 0.2).unwrap().servers;
        assert!(psa.levels.iter().all(|&l| l == want));
    }

    #[test]
    fn sinusoid_schedule_peaks() {
        let rate = RateFunction::sinusoid(30.0, 20.0, 24.0, 0.0);
        let grid = uniform_grid(0.0, 24.0, 0.25);
        let argmax = |xs: &[f64]| xs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let lam: Vec<f64> = grid.iter().map(|&t| rate.rate(t)).collect();
        let peak = argmax(&lam);
        let psa = psa_schedule(&rate, 0.5, 0.3, &grid).unwrap();
        let first_max = |l: &[u64]| {
            let m = *l.iter().max().unwrap();
            l.iter().position(|&x| x == m).unwrap()
        };
        assert!(first_max(&psa.levels) <= peak && psa.levels[peak] == *psa.levels.iter().max().unwrap());
        let mol = mol_schedule(&rate, 0.5, 0.3, &grid).unwrap();
        assert!(first_max(&mol.levels) >= peak);
        assert_eq!(mol.level_at(-1.0), mol.levels[0]);
        assert_eq!(mol.level_at(0.3), mol.levels[1]);
    }
}
