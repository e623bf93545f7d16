//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p qed-core --test acceptance`.

mod common;

use std::time::Instant;

use qed_core::dimensioning::{cost_exact, cost_qed, optimality_gap, staff_exact, staff_qed};
use qed_core::exact::{erlang_b, erlang_c, QueueModel};
use qed_core::grw::{bulk_stationary, grw_constants, pois_plus_stats, BulkModel};
use qed_core::qed::{bounds_table, g, garnett_limits, h, loss_coefficient, qed_bounds};
use qed_core::sim::{run_schedule_experiment, simulate, Horizon, Metric, ScheduleExperiment, SimConfig, SimModel};
use qed_core::specfun::{norm_cdf, normal_dist, normal_quantile};
use qed_core::time_varying::{mol_schedule, psa_schedule, uniform_grid, RateFunction, ScheduleMethod};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// `x` rounded to `decimals` places.
fn printed(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

// s, λ, α, lower, C, upper, refined
const TABLE: [(u64, f64, f64, f64, f64, f64, f64); 10] = [
    (1, 0.382, 0.830, 0.36571, 0.38197, 0.39437, 0.45085),
    (2, 1.000, 0.879, 0.32678, 0.33333, 0.33936, 0.36395),
    (5, 3.209, 0.924, 0.28886, 0.29097, 0.29328, 0.30185),
    (10, 7.298, 0.946, 0.26937, 0.27030, 0.27142, 0.27540),
    (20, 16.000, 0.962, 0.25565, 0.25608, 0.25663, 0.25851),
    (50, 43.411, 0.976, 0.24361, 0.24377, 0.24398, 0.24470),
    (100, 90.488, 0.983, 0.23761, 0.23769, 0.23779, 0.23814),
    (200, 186.349, 0.988, 0.23340, 0.23344, 0.23349, 0.23366),
    (500, 478.134, 0.993, 0.22969, 0.22970, 0.22972, 0.22979),
    (1000, 968.873, 0.995, 0.22783, 0.22783, 0.22784, 0.22788),
];

fn c1_bounds_table() -> Outcome {
    let start = Instant::now();
    let rows = bounds_table().unwrap();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (row, want) in rows.iter().zip(TABLE) {
        let alpha_ok = (printed(row.alpha, 3) - want.2).abs() < 1e-9 && (printed(row.lambda, 3) - want.1).abs() < 1e-9;
        let diffs = [row.lower - want.3, row.exact - want.4, row.upper - want.5, row.refined - want.6];
        let d = diffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(d);
        if row.s != want.0 || !alpha_ok || d > 1e-5 {
            bad.push(row.s);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 1.0,
        format!("10 rows, alpha to 3 decimals, max |diff| {worst:.2e} (tol 1e-5), {secs:.3}s; bad rows {bad:?}"),
    )
}

fn c2_g_values() -> Outcome {
    let cases = [(0.1, 0.880287), (0.5, 0.504539), (1.0, 0.223361)];
    let worst = cases.iter().map(|&(b, w)| (g(b).unwrap() - w).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-6, format!("g(0.1), g(0.5), g(1): max |diff| {worst:.2e} (tol 1e-6)"))
}

fn c3_random_walk() -> Outcome {
    let cases = [(1.0, 0.800543, 0.126373), (0.5, 0.529325, 0.532063), (0.1, 0.133419, 4.44199)];
    let mut worst: f64 = 0.0;
    for (beta, p0, mean) in cases {
        let c = grw_constants(beta).unwrap();
        worst = worst.max((c.p_zero - p0).abs()).max((c.mean_max - mean).abs());
    }
    outcome(worst < 1e-5, format!("P(M=0), E[M] at beta 1, 0.5, 0.1: max |diff| {worst:.2e} (tol 1e-5)"))
}

fn c4_bulk() -> Outcome {
    let b = bulk_stationary(&BulkModel::new(4.0, 5)).unwrap();
    let oracle = common::lindley_value_iteration(4.0, 5);
    let d_p = (b.p_empty - 0.615565).abs();
    let d_m = (b.mean_queue_over_sqrt_lambda - 0.57812).abs();
    let d_vi = (b.p_empty - oracle.p_empty).abs().max((b.mean_queue - oracle.mean).abs());
    outcome(
        d_p < 1e-4 && d_m < 1e-4 && d_vi < 1e-6,
        format!(
            "P(Q=0) {:.6}, E[Q]/sqrt(lambda) {:.6} (E[Q]/sqrt(s) {:.6}); value iteration |diff| {d_vi:.1e} after {} sweeps",
            b.p_empty, b.mean_queue_over_sqrt_lambda, b.mean_queue_over_sqrt_s, oracle.iterations
        ),
    )
}

fn c5_erlang_c() -> Outcome {
    let a = QueueModel::mms(3.2, 4).measures().unwrap();
    let b = QueueModel::mms(9.5, 10).measures().unwrap();
    // reference value, computed value, printed decimals
    let cases = [
        (0.596432, a.delay_prob, 6),
        (0.745541, a.mean_delay, 6),
        (0.825586, b.delay_prob, 6),
        (1.65117, b.mean_delay, 5),
    ];
    let mut raw: f64 = 0.0;
    let mut ok = true;
    for (want, got, digits) in cases {
        raw = raw.max((got - want).abs());
        ok &= (printed(got, digits) - want).abs() < 1e-6;
    }
    outcome(
        ok,
        format!(
            "C(4,3.2) {:.7}, W {:.7}, C(10,9.5) {:.7}, W {:.7}; reproduce printed digits within 1e-6 (raw max |diff| {raw:.2e})",
            a.delay_prob, a.mean_delay, b.delay_prob, b.mean_delay
        ),
    )
}

fn c6_delay_staffing() -> Outcome {
    let start = Instant::now();
    let mut worst = 0;
    for lambda in [10.0, 100.0, 500.0] {
        for k in 1..=19 {
            let eps = k as f64 * 0.05;
            let q = staff_qed(lambda, eps).unwrap().servers;
            let e = staff_exact(lambda, eps).unwrap().servers;
            worst = worst.max(q.abs_diff(e));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1 && secs < 10.0, format!("57 cases, max |s_qed - s*| = {worst}, {secs:.3}s"))
}

fn c7_cost_staffing() -> Outcome {
    let mut worst = 0;
    for lambda in [10.0, 100.0, 500.0] {
        for r in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let q = cost_qed(lambda, r).unwrap().servers;
            let e = cost_exact(lambda, r).unwrap().servers;
            worst = worst.max(q.abs_diff(e));
        }
    }
    let mut gaps = Vec::new();
    let mut decreasing = true;
    for r in [0.1, 1.0, 10.0] {
        let small = optimality_gap(50.0, r).unwrap();
        let large = optimality_gap(500.0, r).unwrap();
        decreasing &= large.continuous.gap_refined < small.continuous.gap_refined;
        decreasing &= large.gap_refined <= small.gap_refined;
        gaps.push(format!(
            "r={r}: {:.2e} -> {:.2e}",
            small.continuous.gap_refined, large.continuous.gap_refined
        ));
    }
    outcome(
        worst <= 1 && decreasing,
        format!("24 cases, max |s_qed - s*| = {worst}; refined gap lambda 50 -> 500 (real s): {}", gaps.join(", ")),
    )
}

fn c8_simulation() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut covered = 0;
    let mut check = |name: &str, config: SimConfig, targets: &[(Metric, f64)]| {
        let metrics: Vec<Metric> = targets.iter().map(|t| t.0).collect();
        let report = simulate(&config, &metrics).unwrap();
        for (m, want) in targets {
            let e = &report.estimates[m];
            if e.covers(*want, 0.99) {
                covered += 1;
            } else {
                let (lo, hi) = e.interval(0.99);
                failures.push(format!("{name} {} [{lo:.6}, {hi:.6}] misses {want:.6}", m.name()));
            }
        }
    };
    let queue = |model, arrivals| SimConfig {
        model,
        horizon: Horizon::Arrivals(arrivals),
        warmup: 100.0,
        replications: 10,
        seed: 1,
    };
    let mms = QueueModel::mms(3.2, 4);
    let m = mms.measures().unwrap();
    check(
        "mms",
        queue(SimModel::Mms(mms), 200_000),
        &[
            (Metric::DelayProb, m.delay_prob),
            (Metric::MeanDelay, m.mean_delay),
            (Metric::MeanQueue, m.mean_queue),
        ],
    );
    let ea = QueueModel::erlang_a(1.0, 2, 1.0);
    let m = ea.measures().unwrap();
    check(
        "erlang-a",
        queue(SimModel::Mmsm(ea), 200_000),
        &[
            (Metric::DelayProb, m.delay_prob),
            (Metric::AbandonProb, m.abandon_prob.unwrap()),
            (Metric::MeanQueue, m.mean_queue),
        ],
    );
    let fb = QueueModel::mmsn(10.0, 12, 16);
    let m = fb.measures().unwrap();
    check(
        "mmsn",
        queue(SimModel::Mmsn(fb), 200_000),
        &[
            (Metric::DelayProb, m.delay_prob),
            (Metric::BlockProb, m.block_prob.unwrap()),
            (Metric::MeanQueue, m.mean_queue),
        ],
    );
    let bulk = BulkModel::new(4.0, 5);
    let exact = bulk_stationary(&bulk).unwrap();
    check(
        "bulk",
        SimConfig {
            model: SimModel::Bulk(bulk),
            horizon: Horizon::Periods(200_000),
            warmup: 1000.0,
            replications: 10,
            seed: 1,
        },
        &[(Metric::PEmpty, exact.p_empty), (Metric::MeanQueue, exact.mean_queue)],
    );
    let mut diffusion = Vec::new();
    for beta in [0.5, 1.0] {
        let config = SimConfig {
            model: SimModel::HwDiffusion {
                beta,
                theta: 0.0,
                step: 1e-3,
            },
            horizon: Horizon::Time(1e5),
            warmup: 10.0 / beta,
            replications: 2,
            seed: 1,
        };
        let est = simulate(&config, &[Metric::FracAboveZero]).unwrap().estimates[&Metric::FracAboveZero].point;
        let want = g(beta).unwrap();
        if (est - want).abs() >= 0.01 {
            failures.push(format!("diffusion beta={beta}: {est:.5} vs g = {want:.5}"));
        }
        diffusion.push(format!("beta={beta}: {est:.5} vs {want:.5}"));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 300.0,
        format!(
            "{covered}/11 analytic values inside 99% CIs; frac_above_zero {}; {secs:.1}s{}",
            diffusion.join(", "),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn c9_time_varying() -> Outcome {
    let mut mol = Vec::new();
    let mut mol_ok = true;
    let mut psa_violates = false;
    let mut psa = Vec::new();
    for eps in [0.1, 0.3, 0.5] {
        let base = ScheduleExperiment {
            epsilon: eps,
            ..ScheduleExperiment::default()
        };
        let m = run_schedule_experiment(&ScheduleExperiment {
            method: ScheduleMethod::Mol,
            replications: 10_000,
            ..base.clone()
        })
        .unwrap()
        .max_deviation(eps);
        mol_ok &= m <= 0.07;
        mol.push(format!("{eps}: {m:.3}"));
        let p = run_schedule_experiment(&ScheduleExperiment {
            method: ScheduleMethod::Psa,
            replications: 2000,
            ..base
        })
        .unwrap()
        .max_deviation(eps);
        psa_violates |= p > 0.07;
        psa.push(format!("{eps}: {p:.3}"));
    }
    outcome(
        mol_ok && psa_violates,
        format!(
            "max |P(delay) - eps| after warm-up, MOL (10000 reps) {}; PSA (2000 reps) {}",
            mol.join(", "),
            psa.join(", ")
        ),
    )
}

fn c10_properties() -> Outcome {
    let mut failed: Vec<&str> = Vec::new();
    let mut counts = 0usize;

    // lower bound C >= g(β) and the two-sided bounds on a λ × β grid
    let lambdas: Vec<f64> = (0..=40).map(|k| 0.25 * (20000f64).powf(k as f64 / 40.0)).collect();
    let betas: Vec<f64> = (0..=29).map(|k| 0.1 + 0.1 * k as f64).collect();
    let (mut dauria, mut sandwich) = (true, true);
    for &l in &lambdas {
        for &b0 in &betas {
            let s = (l + b0 * l.sqrt()).ceil();
            let beta = (s - l) / l.sqrt();
            let c = erlang_c(s as u64, l).unwrap();
            dauria &= c >= g(beta).unwrap();
            if (1.0..=2000.0).contains(&l) && (0.25..=2.0).contains(&b0) {
                let bd = qed_bounds(s as u64, l).unwrap();
                sandwich &= bd.lower <= c && c <= bd.upper && bd.gamma_s < bd.alpha && bd.alpha < beta;
            }
            counts += 1;
        }
    }
    for row in bounds_table().unwrap() {
        sandwich &= row.lower <= row.exact && row.exact <= row.upper;
    }
    if !dauria {
        failed.push("C >= g");
    }
    if !sandwich {
        failed.push("sandwich");
    }

    let mut spitzer = true;
    for lambda in [0.5f64, 1.0, 2.0, 4.0, 7.5, 10.0] {
        let first = lambda.floor() as u64 + 1;
        for s in first..first + 3 {
            let series = bulk_stationary(&BulkModel::new(lambda, s)).unwrap();
            let vi = common::lindley_value_iteration(lambda, s as usize);
            spitzer &= (series.p_empty - vi.p_empty).abs() < 1e-6 && (series.mean_queue - vi.mean).abs() < 1e-6;
        }
    }
    if !spitzer {
        failed.push("spitzer");
    }

    let mut plus = true;
    for m in [0.5, 2.0, 10.0, 50.0] {
        for c in 0..=(3.0 * m) as usize + 10 {
            let want = common::brute_plus_mean(m, c);
            plus &= (pois_plus_stats(m, c as u64).unwrap().plus_mean - want).abs() < 1e-12 * want.max(1.0);
        }
    }
    if !plus {
        failed.push("pois plus");
    }

    let mut normal = true;
    for k in 0..=1200 {
        let x = -6.0 + k as f64 * 0.01;
        normal &= (normal_quantile(norm_cdf(x)).unwrap() - x).abs() < 1e-8;
        let (a, b) = (normal_dist(x).unwrap(), normal_dist(-x).unwrap());
        normal &= (a.cdf + b.cdf - 1.0).abs() < 1e-14;
    }
    if !normal {
        failed.push("normal");
    }

    let mut mono = true;
    for lambda in [0.5f64, 3.2, 9.5, 40.0, 250.0] {
        let first = lambda.floor() as u64 + 1;
        for s in first..first + 60 {
            mono &= erlang_b(s + 1, lambda).unwrap() < erlang_b(s, lambda).unwrap();
            mono &= erlang_c(s + 1, lambda).unwrap() < erlang_c(s, lambda).unwrap();
        }
    }
    for s in [1u64, 4, 20, 200] {
        for k in 20..99 {
            let (l0, l1) = (s as f64 * k as f64 / 100.0, s as f64 * (k + 1) as f64 / 100.0);
            mono &= erlang_c(s, l1).unwrap() > erlang_c(s, l0).unwrap();
        }
    }
    for k in 1..400 {
        let (b0, b1) = (k as f64 * 0.01, (k + 1) as f64 * 0.01);
        mono &= g(b1).unwrap() < g(b0).unwrap();
        mono &= h(b1).unwrap() < h(b0).unwrap();
        mono &= loss_coefficient(b1).unwrap() < loss_coefficient(b0).unwrap();
    }
    for k in 1..30 {
        let d = |b: f64| (garnett_limits(b, 1.0).unwrap().delay_prob - 0.5).abs();
        mono &= d((k + 1) as f64 * 0.1) > d(k as f64 * 0.1);
    }
    let rate = RateFunction::sinusoid(30.0, 20.0, 24.0, 0.0);
    let grid = uniform_grid(0.0, 24.0, 0.25);
    for k in 1..19 {
        let (e0, e1) = (k as f64 * 0.05, (k + 1) as f64 * 0.05);
        for build in [psa_schedule, mol_schedule] {
            let (a, b) = (build(&rate, 0.5, e0, &grid).unwrap(), build(&rate, 0.5, e1, &grid).unwrap());
            mono &= a.levels.iter().zip(&b.levels).all(|(x, y)| x >= y);
        }
    }
    let ladder = bounds_table().unwrap();
    mono &= ladder.windows(2).all(|w| w[1].rel_gap < w[0].rel_gap);
    if !mono {
        failed.push("monotonicity");
    }

    outcome(
        failed.is_empty(),
        format!(
            "C >= g and sandwich on {counts} grid points, Spitzer vs value iteration, Poisson plus-part, normal round trip, monotonicity{}",
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("bounds table", c1_bounds_table),
        ("g(beta) limits", c2_g_values),
        ("random-walk constants", c3_random_walk),
        ("bulk-service values", c4_bulk),
        ("Erlang C values", c5_erlang_c),
        ("delay-target staffing", c6_delay_staffing),
        ("cost staffing", c7_cost_staffing),
        ("simulation vs analytics", c8_simulation),
        ("time-varying staffing", c9_time_varying),
        ("property suites", c10_properties),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
