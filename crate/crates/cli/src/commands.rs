use qed_core::dimensioning::{staff_uncertain, Rule, StaffingProblem, Target};
use qed_core::exact::QueueModel;
use qed_core::grw::{bulk_stationary, grw_beta_limit, grw_constants, BulkModel};
use qed_core::qed::{
    bounds_table, corrected_delay, g, garnett_limits, hw_diffusion_stationary, qed_bounds, qed_finite_buffer_delay,
    scaled_servers, ScalingRule,
};
use qed_core::sim::{
    run_schedule_experiment, sample_path, simulate as run_simulation, Horizon, Metric, Scaling, ScheduleExperiment,
    SimConfig, SimModel,
};
use qed_core::specfun::normal_quantile;
use qed_core::time_varying::{
    mol_schedule, offered_load_at, psa_schedule, uniform_grid, Initial, RateFunction, ScheduleMethod,
};

use crate::report::{Cell, Report};
use crate::{
    usage, CliError, MethodArg, ModelArgs, ModelKind, MtArgs, PathArgs, RuleArg, ScalingArg, ScheduleArgs,
    SimulateArgs, StaffArgs, StaffRule,
};

type Res<T> = Result<T, CliError>;

fn need<T: Copy>(v: Option<T>, flag: &str, model: ModelKind) -> Res<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --model {}", model_name(model))))
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Mms => "mms",
        ModelKind::Mmsn => "mmsn",
        ModelKind::Mmsm => "mmsm",
        ModelKind::Bulk => "bulk",
        ModelKind::Hw => "hw",
        ModelKind::Mt => "mt",
    }
}

fn servers(a: &ModelArgs, load: f64) -> Res<u64> {
    if let Some(s) = a.servers {
        return Ok(s);
    }
    let Some(beta) = a.beta else {
        return usage(format!("--servers (or --beta) is required for --model {}", model_name(a.model)));
    };
    let rule = match a.rule {
        RuleArg::Ed => ScalingRule::Ed,
        RuleArg::Qed => ScalingRule::Qed,
        RuleArg::Qd => ScalingRule::Qd,
    };
    Ok(scaled_servers(load, beta, rule)?)
}

fn queue_model(a: &ModelArgs) -> Res<QueueModel> {
    let lambda = need(a.lambda, "lambda", a.model)?;
    let s = servers(a, lambda / a.mu)?;
    let q = match a.model {
        ModelKind::Mms => QueueModel::mms(lambda, s),
        ModelKind::Mmsn => {
            let n = match (a.buffer, a.gamma) {
                (Some(n), _) => n,
                (None, Some(gamma)) => (s as f64 + gamma * (s as f64).sqrt()).floor() as u64,
                (None, None) => return usage("--buffer (or --gamma) is required for --model mmsn"),
            };
            QueueModel::mmsn(lambda, s, n)
        }
        ModelKind::Mmsm => QueueModel::erlang_a(lambda, s, need(a.theta, "theta", a.model)?),
        _ => unreachable!("not a queue model"),
    };
    let q = q.with_mu(a.mu);
    q.validate()?;
    Ok(q)
}

fn bulk_model(a: &ModelArgs) -> Res<BulkModel> {
    let lambda = need(a.lambda, "lambda", a.model)?;
    let s = servers(a, lambda)?;
    let m = BulkModel::new(lambda, s);
    m.validate()?;
    Ok(m)
}

struct Rows(Report);

impl Rows {
    fn new(model: &str) -> Self {
        let mut r = Report::new("analyze", &["quantity", "value", "abs_diff_from_exact"]);
        r.meta("model", model);
        Rows(r)
    }

    fn add(&mut self, name: &str, value: impl Into<Cell>) -> &mut Self {
        self.0.row(vec![name.into(), value.into(), Cell::Missing]);
        self
    }

    /// An approximation, with its distance from `exact` when available.
    fn approx(&mut self, name: &str, value: Option<f64>, exact: f64) -> &mut Self {
        let diff = value.map(|v| (v - exact).abs());
        self.0.row(vec![name.into(), value.into(), diff.into()]);
        self
    }
}

pub fn analyze(a: &ModelArgs) -> Res<Report> {
    match a.model {
        ModelKind::Mms | ModelKind::Mmsn | ModelKind::Mmsm => {
            let q = queue_model(a)?;
            let m = q.measures()?;
            let load = q.load();
            let s = q.servers;
            let beta = (s as f64 - load) / load.sqrt();
            let mut rows = Rows::new(model_name(a.model));
            rows.0.meta("lambda", q.lambda).meta("mu", q.mu).meta("servers", s);
            rows.add("delay_prob", m.delay_prob);
            if let Some(b) = m.block_prob {
                rows.add("block_prob", b);
            }
            if let Some(p) = m.abandon_prob {
                rows.add("abandon_prob", p);
            }
            rows.add("mean_delay", m.mean_delay)
                .add("mean_queue", m.mean_queue)
                .add("utilization", m.utilization)
                .add("beta", beta);
            let c = m.delay_prob;
            match q.extension {
                qed_core::exact::Extension::None => {
                    let bounds = qed_bounds(s, load).ok();
                    rows.approx("g_beta", g(beta).ok(), c)
                        .approx("corrected_delay", corrected_delay(s, load).ok(), c)
                        .approx("lower_bound", bounds.map(|b| b.lower), c)
                        .approx("upper_bound", bounds.map(|b| b.upper), c)
                        .add("alpha", bounds.map(|b| b.alpha));
                }
                qed_core::exact::Extension::FiniteBuffer { n } => {
                    let gamma = (n as f64 - s as f64) / (s as f64).sqrt();
                    rows.0.meta("buffer", n);
                    rows.add("gamma", gamma)
                        .approx("qed_delay_prob", qed_finite_buffer_delay(beta, gamma).ok(), c);
                }
                qed_core::exact::Extension::Abandonment { theta } => {
                    rows.0.meta("theta", theta);
                    let lim = garnett_limits(beta, theta / q.mu).ok();
                    rows.approx("qed_delay_prob", lim.map(|l| l.delay_prob), c).approx(
                        "qed_abandon_prob",
                        lim.map(|l| l.abandon_coef / load.sqrt()),
                        m.abandon_prob.unwrap_or(0.0),
                    );
                }
            }
            Ok(rows.0)
        }
        ModelKind::Bulk => {
            let b = bulk_model(a)?;
            let st = bulk_stationary(&b)?;
            let beta = (b.servers as f64 - b.lambda) / b.lambda.sqrt();
            let grw = (beta > 0.0 && beta < grw_beta_limit()).then(|| grw_constants(beta)).transpose()?;
            let mut rows = Rows::new("bulk");
            rows.0.meta("lambda", b.lambda).meta("servers", b.servers);
            rows.add("p_empty", st.p_empty)
                .add("mean_queue", st.mean_queue)
                .add("mean_queue_over_sqrt_lambda", st.mean_queue_over_sqrt_lambda)
                .add("mean_queue_over_sqrt_s", st.mean_queue_over_sqrt_s)
                .add("series_terms", st.terms_used as u64)
                .add("beta", beta)
                .approx("grw_p_zero", grw.map(|c| c.p_zero), st.p_empty)
                .approx("grw_mean_max", grw.map(|c| c.mean_max), st.mean_queue_over_sqrt_lambda);
            Ok(rows.0)
        }
        ModelKind::Hw => {
            let beta = need(a.beta, "beta", a.model)?;
            let mut rows = Rows::new("hw");
            rows.0.meta("beta", beta);
            match a.theta.filter(|t| *t > 0.0) {
                None => {
                    let st = hw_diffusion_stationary(beta)?;
                    rows.add("p_positive", st.p_positive)
                        .add("mean_positive_part", st.mean)
                        .add("mean_below_zero_conditional", st.mean_below());
                }
                Some(theta) => {
                    rows.0.meta("theta", theta);
                    let lim = garnett_limits(beta, theta)?;
                    rows.add("p_positive", lim.delay_prob);
                }
            }
            Ok(rows.0)
        }
        ModelKind::Mt => usage("analyze does not take --model mt; use schedule or simulate"),
    }
}

pub fn staff(a: &StaffArgs) -> Res<Report> {
    let mut r = Report::new("staff", &["rule", "servers", "beta", "predicted", "achieved"]);
    r.meta("lambda", a.lambda);
    if let Some(sigma) = a.sigma {
        let eps = a.epsilon.expect("clap enforces --epsilon with --sigma");
        let s = staff_uncertain(a.lambda, sigma, eps)?;
        r.meta("target", format!("delay_prob {eps}")).meta("sigma", sigma);
        r.row(vec![
            "uncertain".into(),
            s.into(),
            normal_quantile(1.0 - eps)?.into(),
            Cell::Missing,
            Cell::Missing,
        ]);
        return Ok(r);
    }
    let target = match (a.epsilon, a.cost_ratio) {
        (Some(epsilon), None) => Target::DelayProb { epsilon },
        (None, Some(r)) => Target::CostRatio { r },
        _ => return usage("give exactly one of --epsilon and --cost-ratio"),
    };
    let is_cost = matches!(target, Target::CostRatio { .. });
    let rules: Vec<Rule> = match a.rule {
        StaffRule::Exact => vec![Rule::Exact],
        StaffRule::Qed => vec![Rule::Qed],
        StaffRule::Refined if !is_cost => return usage("--rule refined needs --cost-ratio"),
        StaffRule::Refined => vec![Rule::Refined],
        StaffRule::All if is_cost => vec![Rule::Exact, Rule::Qed, Rule::Refined],
        StaffRule::All => vec![Rule::Exact, Rule::Qed],
    };
    r.meta(
        "target",
        match target {
            Target::DelayProb { epsilon } => format!("delay_prob {epsilon}"),
            Target::CostRatio { r } => format!("cost_ratio {r}"),
        },
    );
    let problem = StaffingProblem { lambda: a.lambda, target };
    for rule in rules {
        let sol = problem.solve(rule)?;
        let name = match rule {
            Rule::Exact => "exact",
            Rule::Qed => "qed",
            Rule::Refined => "refined",
        };
        r.row(vec![
            name.into(),
            sol.servers.into(),
            sol.beta_used.into(),
            sol.predicted.into(),
            sol.achieved.into(),
        ]);
    }
    Ok(r)
}

pub fn table1() -> Res<Report> {
    let mut r = Report::new(
        "table1",
        &["s", "lambda", "alpha", "lower", "exact", "upper", "rel_gap", "refined", "rel_refined_err"],
    );
    r.meta("beta", 1).digits("lambda", 5).digits("alpha", 3);
    for row in bounds_table()? {
        r.row(vec![
            row.s.into(),
            row.lambda.into(),
            row.alpha.into(),
            row.lower.into(),
            row.exact.into(),
            row.upper.into(),
            row.rel_gap.into(),
            row.refined.into(),
            row.rel_refined_err.into(),
        ]);
    }
    Ok(r)
}

pub fn schedule(a: &ScheduleArgs) -> Res<Report> {
    let rate = RateFunction::parse(&a.rate)?;
    if !(a.step > 0.0 && a.horizon > 0.0) {
        return usage("--step and --horizon must be positive");
    }
    let grid = uniform_grid(0.0, a.horizon, a.step);
    let load = offered_load_at(&rate, a.mu, &grid, Initial::Stationary)?;
    let psa = matches!(a.method, MethodArg::Psa | MethodArg::Both)
        .then(|| psa_schedule(&rate, a.mu, a.epsilon, &grid))
        .transpose()?;
    let mol = matches!(a.method, MethodArg::Mol | MethodArg::Both)
        .then(|| mol_schedule(&rate, a.mu, a.epsilon, &grid))
        .transpose()?;
    let mut r = Report::new("schedule", &["t", "lambda", "offered_load", "psa", "mol"]);
    r.meta("rate", &a.rate).meta("mu", a.mu).meta("epsilon", a.epsilon);
    for (i, &t) in grid.iter().enumerate() {
        r.row(vec![
            t.into(),
            rate.rate(t).into(),
            load[i].into(),
            psa.as_ref().map(|s| s.levels[i]).into(),
            mol.as_ref().map(|s| s.levels[i]).into(),
        ]);
    }
    Ok(r)
}

fn default_metrics(model: ModelKind) -> Vec<Metric> {
    use Metric::*;
    match model {
        ModelKind::Mms | ModelKind::Mt => vec![DelayProb, MeanDelay, MeanQueue],
        ModelKind::Mmsn => vec![DelayProb, BlockProb, MeanDelay, MeanQueue],
        ModelKind::Mmsm => vec![DelayProb, AbandonProb, MeanQueue],
        ModelKind::Bulk => vec![PEmpty, MeanQueue],
        ModelKind::Hw => vec![FracAboveZero],
    }
}

fn method(m: Option<MethodArg>) -> Res<ScheduleMethod> {
    match m {
        Some(MethodArg::Psa) => Ok(ScheduleMethod::Psa),
        Some(MethodArg::Mol) => Ok(ScheduleMethod::Mol),
        Some(MethodArg::Both) => usage("--schedule must be psa or mol for a simulation"),
        None => usage("--schedule (psa or mol) is required for --model mt"),
    }
}

struct Run {
    horizon: Option<f64>,
    arrivals: Option<u64>,
    periods: Option<u64>,
    warmup: Option<f64>,
    reps: usize,
    seed: u64,
    step: f64,
}

fn sim_config(a: &ModelArgs, run: &Run) -> Res<SimConfig> {
    let (model, horizon, warmup) = match a.model {
        ModelKind::Mms | ModelKind::Mmsn | ModelKind::Mmsm => {
            let q = queue_model(a)?;
            let model = match a.model {
                ModelKind::Mms => SimModel::Mms(q),
                ModelKind::Mmsn => SimModel::Mmsn(q),
                _ => SimModel::Mmsm(q),
            };
            let (horizon, cap) = match (run.arrivals, run.horizon) {
                (Some(n), _) => (Horizon::Arrivals(n), f64::INFINITY),
                (None, Some(h)) => (Horizon::Time(h), h / 10.0),
                (None, None) => (Horizon::Arrivals(100_000), f64::INFINITY),
            };
            (model, horizon, run.warmup.unwrap_or((1000.0 / q.mu).min(cap)))
        }
        ModelKind::Bulk => {
            let periods = match (run.periods, run.horizon) {
                (Some(p), _) => p,
                (None, Some(h)) => h.round() as u64,
                (None, None) => 100_000,
            };
            let warmup = run.warmup.unwrap_or((periods as f64 / 10.0).min(1000.0).floor());
            (SimModel::Bulk(bulk_model(a)?), Horizon::Periods(periods), warmup)
        }
        ModelKind::Hw => {
            let beta = need(a.beta, "beta", a.model)?;
            let theta = a.theta.unwrap_or(0.0);
            let h = run.horizon.unwrap_or(1e4);
            let relax = if beta > 0.0 { 10.0 / beta } else { 10.0 / theta.max(1e-12) };
            let warmup = run.warmup.unwrap_or(relax.min(h / 10.0));
            (
                SimModel::HwDiffusion { beta, theta, step: run.step },
                Horizon::Time(h),
                warmup,
            )
        }
        ModelKind::Mt => unreachable!("mt is handled separately"),
    };
    Ok(SimConfig {
        model,
        horizon,
        warmup,
        replications: run.reps,
        seed: run.seed,
    })
}

fn experiment(a: &ModelArgs, mt: &MtArgs, horizon: f64, reps: usize, seed: u64) -> Res<ScheduleExperiment> {
    let Some(rate) = &mt.rate else {
        return usage("--rate is required for --model mt");
    };
    Ok(ScheduleExperiment {
        rate: RateFunction::parse(rate)?,
        mu: a.mu,
        epsilon: need(mt.epsilon, "epsilon", ModelKind::Mt)?,
        method: method(mt.schedule)?,
        grid_step: mt.grid_step,
        report_step: mt.report_step,
        horizon,
        burn_in: mt.burn_in,
        replications: reps,
        seed,
    })
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("config serialises")
}

pub fn simulate(a: &SimulateArgs) -> Res<Report> {
    if !(a.confidence > 0.0 && a.confidence < 1.0) {
        return usage(format!("--confidence must lie in (0,1), got {}", a.confidence));
    }
    let reps = a.reps.map(|r| r as usize);
    if a.model.model == ModelKind::Mt {
        let exp = experiment(&a.model, &a.mt, a.horizon.unwrap_or(24.0), reps.unwrap_or(2000), a.seed)?;
        let res = run_schedule_experiment(&exp)?;
        let mut r = Report::new("simulate", &["t", "delay_prob", "stderr", "lo", "hi", "servers", "offered_load"]);
        let max_dev = res.max_deviation(exp.epsilon);
        r.meta("seed", exp.seed)
            .meta("confidence", a.confidence)
            .meta("replications", exp.replications)
            .meta("config", to_json(&exp))
            .meta("warmup", res.warmup)
            .meta("max_abs_deviation_after_warmup", max_dev);
        for (i, e) in res.profile.estimates.iter().enumerate() {
            let t = res.profile.edges[i];
            let k = res.schedule.cell(t);
            let (lo, hi) = e.interval(a.confidence);
            r.row(vec![
                t.into(),
                e.point.into(),
                e.stderr.into(),
                lo.into(),
                hi.into(),
                res.schedule.levels[k].into(),
                res.offered_load[k].into(),
            ]);
        }
        return Ok(r);
    }
    let metrics = if a.metrics.is_empty() {
        default_metrics(a.model.model)
    } else {
        a.metrics
            .iter()
            .map(|m| {
                Metric::parse(m).ok_or_else(|| {
                    let names: Vec<_> = Metric::ALL.iter().map(|m| m.name()).collect();
                    CliError::Usage(format!("--metric '{m}' is not one of {}", names.join(", ")))
                })
            })
            .collect::<Res<Vec<_>>>()?
    };
    let config = sim_config(
        &a.model,
        &Run {
            horizon: a.horizon,
            arrivals: a.arrivals,
            periods: a.periods,
            warmup: a.warmup,
            reps: reps.unwrap_or(10),
            seed: a.seed,
            step: a.step,
        },
    )?;
    let rep = run_simulation(&config, &metrics)?;
    let mut r = Report::new("simulate", &["metric", "point", "stderr", "lo", "hi"]);
    r.meta("seed", rep.seed)
        .meta("confidence", a.confidence)
        .meta("replications", rep.replications)
        .meta("config", to_json(&config));
    if !rep.warnings.is_empty() {
        r.meta("warnings", rep.warnings.join("; "));
    }
    for (m, e) in &rep.estimates {
        let (lo, hi) = e.interval(a.confidence);
        r.row(vec![m.name().into(), e.point.into(), e.stderr.into(), lo.into(), hi.into()]);
    }
    Ok(r)
}

pub fn path(a: &PathArgs) -> Res<Report> {
    let scaling = match a.scaling {
        ScalingArg::Raw => Scaling::Raw,
        ScalingArg::Centered => Scaling::CenteredScaled,
    };
    let config = if a.model.model == ModelKind::Mt {
        let exp = experiment(&a.model, &a.mt, a.horizon, 1, a.seed)?;
        let grid = uniform_grid(0.0, a.horizon, exp.grid_step);
        let schedule = match exp.method {
            ScheduleMethod::Psa => psa_schedule(&exp.rate, exp.mu, exp.epsilon, &grid)?,
            ScheduleMethod::Mol => mol_schedule(&exp.rate, exp.mu, exp.epsilon, &grid)?,
        };
        let r0 = offered_load_at(&exp.rate, exp.mu, &grid[..1], Initial::Stationary)?[0];
        SimConfig {
            model: SimModel::Mt {
                rate: exp.rate,
                schedule,
                initial_load: r0,
            },
            horizon: Horizon::Time(a.horizon),
            warmup: a.warmup,
            replications: 1,
            seed: a.seed,
        }
    } else {
        let horizon = (a.model.model != ModelKind::Bulk).then_some(a.horizon);
        let periods = (a.model.model == ModelKind::Bulk).then_some(a.horizon.round() as u64);
        let mut c = sim_config(
            &a.model,
            &Run {
                horizon,
                arrivals: None,
                periods,
                warmup: Some(a.warmup),
                reps: 1,
                seed: a.seed,
                step: a.step,
            },
        )?;
        c.horizon = match c.model {
            SimModel::Bulk(_) => c.horizon,
            _ => Horizon::Time(a.horizon),
        };
        c
    };
    let p = sample_path(&config, scaling)?;
    let mut r = Report::new("path", &["time", "value", "servers"]);
    r.meta("seed", a.seed)
        .meta("scaling", if scaling == Scaling::Raw { "raw" } else { "centered_scaled" })
        .meta("config", to_json(&config));
    for (i, (&t, &v)) in p.times.iter().zip(&p.values).enumerate() {
        let level = p.levels.as_ref().map(|l| l[i] as u64);
        r.row(vec![t.into(), v.into(), level.into()]);
    }
    Ok(r)
}
