//! Stochastic simulation used to validate the analytic results.
//!
//! Each replication draws from its own random streams derived from
//! `(seed, replication, purpose)`. Replications run in parallel and are
//! combined in replication order, so results depend only on the
//! configuration and the seed.
//!
//! Estimates are means over independent replications with Student-t
//! intervals. Delay probabilities count admitted arrivals that find every
//! active server busy. Waiting times cover admitted jobs that do not abandon.

mod bulk;
mod diffusion;
mod estimate;
mod events;
mod nhpp;
pub mod rng;

use std::collections::BTreeMap;

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use estimate::SimEstimate;
pub use nhpp::nhpp_arrivals;

use crate::error::{config, domain, Result};
use crate::exact::{Extension, QueueModel};
use crate::grw::BulkModel;
use crate::time_varying::{
    mol_schedule, offered_load_at, psa_schedule, uniform_grid, Initial, RateFunction, ScheduleMethod,
    StaffingSchedule,
};
use events::{Arrivals, EventSpec, Servers, Stop};
use rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimModel {
    Mms(QueueModel),
    Mmsn(QueueModel),
    Mmsm(QueueModel),
    /// Time-varying arrivals and staffing; `initial_load` seeds the system
    /// with `Pois(initial_load)` jobs at time zero.
    Mt {
        rate: RateFunction,
        schedule: StaffingSchedule,
        initial_load: f64,
    },
    Bulk(BulkModel),
    HwDiffusion { beta: f64, theta: f64, step: f64 },
}

impl SimModel {
    fn name(&self) -> &'static str {
        match self {
            SimModel::Mms(_) => "mms",
            SimModel::Mmsn(_) => "mmsn",
            SimModel::Mmsm(_) => "mmsm",
            SimModel::Mt { .. } => "mt",
            SimModel::Bulk(_) => "bulk",
            SimModel::HwDiffusion { .. } => "hw_diffusion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Time(f64),
    /// Arrivals counted after the warm-up (queue models only).
    Arrivals(u64),
    /// Service periods (bulk model only).
    Periods(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: SimModel,
    pub horizon: Horizon,
    /// Time (or periods for the bulk model) discarded before measuring.
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DelayProb,
    MeanDelay,
    PEmpty,
    MeanQueue,
    AbandonProb,
    BlockProb,
    /// Time fraction with more jobs than servers (diffusion: `X > 0`).
    FracAboveZero,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::DelayProb,
        Metric::MeanDelay,
        Metric::PEmpty,
        Metric::MeanQueue,
        Metric::AbandonProb,
        Metric::BlockProb,
        Metric::FracAboveZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::DelayProb => "delay_prob",
            Metric::MeanDelay => "mean_delay",
            Metric::PEmpty => "p_empty",
            Metric::MeanQueue => "mean_queue",
            Metric::AbandonProb => "abandon_prob",
            Metric::BlockProb => "block_prob",
            Metric::FracAboveZero => "frac_above_zero",
        }
    }

    pub fn parse(text: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == text)
    }

    fn applies_to(self, model: &SimModel) -> bool {
        use Metric::*;
        match model {
            SimModel::Mms(_) => !matches!(self, AbandonProb | BlockProb),
            SimModel::Mmsn(_) => self != AbandonProb,
            SimModel::Mmsm(_) => self != BlockProb,
            SimModel::Mt { .. } => !matches!(self, AbandonProb | BlockProb),
            SimModel::Bulk(_) => matches!(self, PEmpty | MeanQueue),
            SimModel::HwDiffusion { .. } => matches!(self, FracAboveZero | MeanQueue),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub replications: usize,
    pub estimates: BTreeMap<Metric, SimEstimate>,
    pub warnings: Vec<String>,
}

fn check_queue(q: &QueueModel, want: &str) -> Result<()> {
    q.validate()?;
    let ok = matches!(
        (want, q.extension),
        ("mms", Extension::None) | ("mmsn", Extension::FiniteBuffer { .. }) | ("mmsm", Extension::Abandonment { .. })
    );
    if !ok {
        return config(format!("{want} simulation given a queue with extension {:?}", q.extension));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return config("replications must be positive");
        }
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return config(format!("warmup must be non-negative, got {}", self.warmup));
        }
        match &self.model {
            SimModel::Mms(q) => check_queue(q, "mms")?,
            SimModel::Mmsn(q) => check_queue(q, "mmsn")?,
            SimModel::Mmsm(q) => check_queue(q, "mmsm")?,
            SimModel::Mt { rate, schedule, initial_load } => {
                rate.validate()?;
                schedule.validate()?;
                if !(*initial_load >= 0.0 && initial_load.is_finite()) {
                    return config(format!("initial load must be non-negative, got {initial_load}"));
                }
            }
            SimModel::Bulk(b) => b.validate()?,
            SimModel::HwDiffusion { beta, theta, step } => {
                if !(*beta > 0.0 || (*theta > 0.0 && beta.is_finite())) {
                    return domain(format!("diffusion needs beta > 0 unless theta > 0, got beta={beta}"));
                }
                if !(*theta >= 0.0 && theta.is_finite()) {
                    return domain(format!("theta must be non-negative, got {theta}"));
                }
                if !(*step > 0.0 && step.is_finite()) {
                    return config(format!("step must be positive, got {step}"));
                }
            }
        }
        match (&self.model, self.horizon) {
            (SimModel::Bulk(_), Horizon::Periods(p)) => {
                if self.warmup >= p as f64 {
                    return config("warmup must be shorter than the horizon");
                }
            }
            (SimModel::Bulk(_), _) => return config("the bulk model takes a horizon in periods"),
            (_, Horizon::Periods(_)) => return config("a horizon in periods applies to the bulk model only"),
            (SimModel::Mms(_) | SimModel::Mmsn(_) | SimModel::Mmsm(_), Horizon::Arrivals(n)) => {
                if n == 0 {
                    return config("arrival horizon must be positive");
                }
            }
            (_, Horizon::Arrivals(_)) => return config("an arrival-count horizon applies to stationary queue models only"),
            (_, Horizon::Time(h)) => {
                if !(h > self.warmup && h.is_finite()) {
                    return config(format!("horizon {h} must exceed warmup {}", self.warmup));
                }
            }
        }
        Ok(())
    }

    fn event_spec<'a>(&'a self, record_path: bool, profile: Option<&'a [f64]>, initial: u64) -> Option<EventSpec<'a>> {
        let stop = match self.horizon {
            Horizon::Time(h) => Stop::Time(h),
            Horizon::Arrivals(n) => Stop::Arrivals(n),
            Horizon::Periods(_) => return None,
        };
        let base = |q: &QueueModel, theta: f64, capacity: Option<u64>| EventSpec {
            mu: q.mu,
            theta,
            capacity,
            servers: Servers::Fixed(q.servers),
            arrivals: Arrivals::Poisson(q.lambda),
            stop,
            warmup: self.warmup,
            initial,
            record_path,
            profile,
        };
        match &self.model {
            SimModel::Mms(q) => Some(base(q, 0.0, None)),
            SimModel::Mmsn(q) => match q.extension {
                Extension::FiniteBuffer { n } => Some(base(q, 0.0, Some(n))),
                _ => None,
            },
            SimModel::Mmsm(q) => match q.extension {
                Extension::Abandonment { theta } => Some(base(q, theta, None)),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Per-replication values of each requested metric.
fn replicate(config: &SimConfig, metrics: &[Metric], rep: u64) -> Result<Vec<f64>> {
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    match &config.model {
        SimModel::Bulk(model) => {
            let Horizon::Periods(periods) = config.horizon else { unreachable!() };
            let mut rng = stream(config.seed, rep, Purpose::Arrivals);
            let st = bulk::run(model, periods, config.warmup.round() as u64, false, &mut rng)?;
            let n = st.periods as f64;
            Ok(metrics
                .iter()
                .map(|m| match m {
                    Metric::PEmpty => st.empty as f64 / n,
                    _ => st.queue_sum / n,
                })
                .collect())
        }
        SimModel::HwDiffusion { beta, theta, step } => {
            let Horizon::Time(h) = config.horizon else { unreachable!() };
            let mut rng = stream(config.seed, rep, Purpose::Noise);
            let st = diffusion::run(*beta, *theta, *step, h, config.warmup, 0, &mut rng);
            let n = st.steps as f64;
            Ok(metrics
                .iter()
                .map(|m| match m {
                    Metric::FracAboveZero => st.above as f64 / n,
                    _ => st.plus_sum / n,
                })
                .collect())
        }
        _ => {
            let st = run_events(config, rep, false, None)?;
            Ok(metrics
                .iter()
                .map(|m| match m {
                    Metric::DelayProb => ratio(st.delayed as f64, st.admitted as f64),
                    Metric::MeanDelay => ratio(st.wait_sum, st.wait_count as f64),
                    Metric::PEmpty => ratio(st.time_empty, st.observed),
                    Metric::MeanQueue => ratio(st.queue_area, st.observed),
                    Metric::AbandonProb => ratio(st.abandoned as f64, st.admitted as f64),
                    Metric::BlockProb => ratio(st.blocked as f64, st.arrivals as f64),
                    Metric::FracAboveZero => ratio(st.time_above, st.observed),
                })
                .collect())
        }
    }
}

fn run_events(config: &SimConfig, rep: u64, record_path: bool, profile: Option<&[f64]>) -> Result<events::EventStats> {
    if let SimModel::Mt { rate, schedule, initial_load } = &config.model {
        let Horizon::Time(h) = config.horizon else { unreachable!() };
        let mut arr_rng = stream(config.seed, rep, Purpose::Arrivals);
        let times = nhpp_arrivals(rate, 0.0, h, &mut arr_rng)?;
        let initial = if *initial_load > 0.0 {
            let mut rng = stream(config.seed, rep, Purpose::Initial);
            Poisson::new(*initial_load)
                .map_err(|e| crate::QedError::Domain(e.to_string()))?
                .sample(&mut rng) as u64
        } else {
            0
        };
        let spec = EventSpec {
            mu: schedule.mu,
            theta: 0.0,
            capacity: None,
            servers: Servers::Schedule(schedule),
            arrivals: Arrivals::Times(&times),
            stop: Stop::Time(h),
            warmup: config.warmup,
            initial,
            record_path,
            profile,
        };
        // Arrival times already consumed the arrival stream, so the event
        // loop's own arrival stream is unused here.
        return Ok(events::run(&spec, config.seed, rep));
    }
    let spec = config
        .event_spec(record_path, profile, 0)
        .ok_or_else(|| crate::QedError::Config(format!("{} is not an event model", config.model.name())))?;
    Ok(events::run(&spec, config.seed, rep))
}

/// Estimate `metrics` over `config.replications` independent runs.
pub fn simulate(config: &SimConfig, metrics: &[Metric]) -> Result<SimReport> {
    config.validate()?;
    if metrics.is_empty() {
        return crate::error::config("no metrics requested");
    }
    if let Some(m) = metrics.iter().find(|m| !m.applies_to(&config.model)) {
        return crate::error::config(format!("metric {} does not apply to the {} model", m.name(), config.model.name()));
    }
    let mut warnings = Vec::new();
    if let SimModel::Mms(q) = &config.model {
        if q.rho() >= 1.0 {
            warnings.push(format!("rho = {} >= 1: the queue is unstable, estimates are transient", q.rho()));
        }
    }
    let per_rep: Vec<Vec<f64>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| replicate(config, metrics, rep))
        .collect::<Result<_>>()?;
    let mut estimates = BTreeMap::new();
    for (j, m) in metrics.iter().enumerate() {
        let values: Vec<f64> = per_rep.iter().map(|v| v[j]).collect();
        estimates.insert(*m, SimEstimate::from_replications(&values)?);
    }
    Ok(SimReport {
        seed: config.seed,
        replications: config.replications,
        estimates,
        warnings,
    })
}

/// Fraction of time all active servers are busy in each cell of `edges`,
/// which by PASTA is the delay probability seen by arrivals in the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub edges: Vec<f64>,
    pub estimates: Vec<SimEstimate>,
}

pub fn delay_profile(config: &SimConfig, edges: &[f64]) -> Result<DelayProfile> {
    config.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return crate::error::config("profile edges must be increasing with at least two entries");
    }
    if !matches!(config.horizon, Horizon::Time(_)) {
        return crate::error::config("a delay profile needs a time horizon");
    }
    let per_rep: Vec<Vec<f64>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let st = run_events(config, rep, false, Some(edges))?;
            Ok(st
                .profile_busy
                .iter()
                .zip(&st.profile_time)
                .map(|(b, t)| if *t > 0.0 { b / t } else { 0.0 })
                .collect())
        })
        .collect::<Result<_>>()?;
    let estimates = (0..edges.len() - 1)
        .map(|i| SimEstimate::from_replications(&per_rep.iter().map(|v| v[i]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    Ok(DelayProfile {
        edges: edges.to_vec(),
        estimates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Raw,
    /// `(Q - s)/√s` with `s` the active server level at each time.
    CenteredScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub scaling: Scaling,
    /// Server level at each point (absent for the diffusion).
    pub levels: Option<Vec<f64>>,
}

/// Cap on stored diffusion points.
const MAX_PATH_POINTS: f64 = 200_000.0;

/// One replication's path (replication index 0) over the whole run, warm-up
/// included. Diffusion paths are already on the centred-scaled axis, so
/// scaling leaves them unchanged.
pub fn sample_path(config: &SimConfig, scaling: Scaling) -> Result<SamplePath> {
    config.validate()?;
    let (times, raw, levels) = match &config.model {
        SimModel::Bulk(model) => {
            let Horizon::Periods(p) = config.horizon else { unreachable!() };
            let mut rng = stream(config.seed, 0, Purpose::Arrivals);
            let st = bulk::run(model, p, config.warmup.round() as u64, true, &mut rng)?;
            let n = st.path.len();
            ((0..n).map(|k| k as f64).collect(), st.path, Some(vec![model.servers as f64; n]))
        }
        SimModel::HwDiffusion { beta, theta, step } => {
            let Horizon::Time(h) = config.horizon else { unreachable!() };
            let stride = ((h / step) / MAX_PATH_POINTS).ceil().max(1.0) as u64;
            let mut rng = stream(config.seed, 0, Purpose::Noise);
            let st = diffusion::run(*beta, *theta, *step, h, config.warmup, stride, &mut rng);
            (st.path_times, st.path_values, None)
        }
        _ => {
            let st = run_events(config, 0, true, None)?;
            (st.path_times, st.path_counts, Some(st.path_levels))
        }
    };
    let values = match (scaling, &levels) {
        (Scaling::CenteredScaled, Some(lv)) => raw.iter().zip(lv).map(|(q, s)| (q - s) / s.sqrt()).collect(),
        _ => raw,
    };
    Ok(SamplePath {
        times,
        values,
        scaling,
        levels,
    })
}

/// Sinusoidal time-varying staffing experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleExperiment {
    pub rate: RateFunction,
    pub mu: f64,
    pub epsilon: f64,
    pub method: ScheduleMethod,
    /// Spacing of the staffing grid.
    pub grid_step: f64,
    /// Width of the cells over which the delay probability is reported.
    pub report_step: f64,
    pub horizon: f64,
    /// Time simulated before the reported window so it starts in periodic
    /// steady state.
    pub burn_in: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for ScheduleExperiment {
    fn default() -> Self {
        Self {
            rate: RateFunction::sinusoid(30.0, 20.0, 24.0, 0.0),
            mu: 0.5,
            epsilon: 0.3,
            method: ScheduleMethod::Mol,
            grid_step: 0.02,
            report_step: 0.25,
            horizon: 24.0,
            burn_in: 48.0,
            replications: 2000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schedule: StaffingSchedule,
    /// Offered load on the schedule grid.
    pub offered_load: Vec<f64>,
    pub profile: DelayProfile,
    /// Cells starting before this time are warm-up (one mean service time).
    pub warmup: f64,
}

impl ExperimentResult {
    /// Largest `|P(delay) - target|` over the cells after the warm-up.
    pub fn max_deviation(&self, target: f64) -> f64 {
        self.profile
            .estimates
            .iter()
            .zip(&self.profile.edges)
            .filter(|(_, &t)| t >= self.warmup)
            .map(|(e, _)| (e.point - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Staff by PSA or MOL and simulate the delay probability over time.
///
/// The system starts at `-burn_in` with `Pois(R)` jobs, the periodic
/// stationary law of the infinite-server queue with the same arrivals, and
/// only `[0, horizon]` is reported.
pub fn run_schedule_experiment(exp: &ScheduleExperiment) -> Result<ExperimentResult> {
    if !(exp.burn_in >= 0.0 && exp.burn_in.is_finite()) {
        return crate::error::config(format!("burn-in must be non-negative, got {}", exp.burn_in));
    }
    let shift = exp.burn_in;
    let rate = exp.rate.shifted(shift);
    let sim_grid: Vec<f64> = uniform_grid(-shift, exp.horizon, exp.grid_step)
        .into_iter()
        .map(|t| t + shift)
        .collect();
    let schedule = match exp.method {
        ScheduleMethod::Psa => psa_schedule(&rate, exp.mu, exp.epsilon, &sim_grid)?,
        ScheduleMethod::Mol => mol_schedule(&rate, exp.mu, exp.epsilon, &sim_grid)?,
    };
    let load = offered_load_at(&rate, exp.mu, &sim_grid, Initial::Stationary)?;
    let config = SimConfig {
        model: SimModel::Mt {
            rate,
            schedule: schedule.clone(),
            initial_load: load[0],
        },
        horizon: Horizon::Time(exp.horizon + shift),
        warmup: 0.0,
        replications: exp.replications,
        seed: exp.seed,
    };
    let first = sim_grid.partition_point(|&t| t < shift - 1e-9 * shift.max(1.0));
    let cells: Vec<f64> = uniform_grid(0.0, exp.horizon, exp.report_step)
        .into_iter()
        .map(|t| t + shift)
        .collect();
    let profile = delay_profile(&config, &cells)?;
    let back = |ts: &[f64]| ts.iter().map(|t| t - shift).collect::<Vec<_>>();
    Ok(ExperimentResult {
        schedule: StaffingSchedule {
            grid: back(&schedule.grid[first..]),
            levels: schedule.levels[first..].to_vec(),
            ..schedule
        },
        offered_load: load[first..].to_vec(),
        profile: DelayProfile {
            edges: back(&profile.edges),
            estimates: profile.estimates,
        },
        warmup: 1.0 / exp.mu,
    })
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
