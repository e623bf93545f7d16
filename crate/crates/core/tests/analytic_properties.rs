//! Invariants of the special functions, exact queue formulas and QED limits.

mod common;

use proptest::prelude::*;
use qed_core::exact::{erlang_b, erlang_c, QueueModel};
use qed_core::grw::{bulk_stationary, grw_constants, pois_plus_stats, BulkModel};
use qed_core::qed::{
    bounds_table, corrected_delay, g, garnett_limits, h, hw_diffusion_stationary, load_for_servers, loss_coefficient,
    qed_bounds, LADDER,
};
use qed_core::quadrature::integrate;
use qed_core::specfun::{norm_cdf, normal_dist, normal_quantile, poisson_pmf, poisson_tail};

proptest! {
    #[test]
    fn normal_symmetry(x in -30.0f64..30.0) {
        let a = normal_dist(x).unwrap();
        let b = normal_dist(-x).unwrap();
        prop_assert!((a.cdf + b.cdf - 1.0).abs() < 1e-14);
        prop_assert!((a.pdf - b.pdf).abs() < 1e-14);
    }

    #[test]
    fn quantile_round_trip(x in -6.0f64..6.0) {
        let back = normal_quantile(norm_cdf(x)).unwrap();
        prop_assert!((back - x).abs() < 1e-8, "x={x} back={back}");
    }

    #[test]
    fn poisson_tail_difference_is_pmf(m in 0.01f64..50.0, c in 0u64..200) {
        let t = poisson_tail(m, c).unwrap();
        prop_assert!((t.p_geq - t.p_gt - poisson_pmf(m, c)).abs() < 1e-12);
    }

    #[test]
    fn erlang_c_from_b(lambda in 0.05f64..190.0, extra in 0.01f64..10.0) {
        let s = (lambda + extra).ceil().min(200.0) as u64;
        prop_assume!((s as f64) > lambda);
        let rho = lambda / s as f64;
        let b = erlang_b(s, lambda).unwrap();
        let c = erlang_c(s, lambda).unwrap();
        let via_b = 1.0 / (rho + (1.0 - rho) / b);
        prop_assert!((c - via_b).abs() < 1e-12 * c.max(1e-300), "s={s} λ={lambda}");
    }

    #[test]
    fn d_auria_lower_bound(lambda in 0.25f64..5000.0, beta0 in 0.1f64..3.0) {
        let s = (lambda + beta0 * lambda.sqrt()).ceil();
        let beta = (s - lambda) / lambda.sqrt();
        let c = erlang_c(s as u64, lambda).unwrap();
        prop_assert!(c >= g(beta).unwrap() - 1e-14, "s={s} λ={lambda}");
    }

    #[test]
    fn sandwich_bounds(lambda in 1.0f64..2000.0, beta0 in 0.25f64..2.0) {
        let s = (lambda + beta0 * lambda.sqrt()).ceil();
        let beta = (s - lambda) / lambda.sqrt();
        let b = qed_bounds(s as u64, lambda).unwrap();
        let c = erlang_c(s as u64, lambda).unwrap();
        prop_assert!(b.lower <= c * (1.0 + 1e-12) && c <= b.upper * (1.0 + 1e-12), "s={s} λ={lambda}");
        prop_assert!(b.gamma_s < b.alpha && b.alpha < beta);
    }

    #[test]
    fn little_law(lambda in 0.1f64..50.0, extra in 0.1f64..20.0, theta in 0.05f64..5.0) {
        let s = (lambda + extra).ceil() as u64;
        for model in [QueueModel::mms(lambda, s), QueueModel::erlang_a(lambda, s, theta)] {
            let m = model.measures().unwrap();
            prop_assert!((m.mean_queue - lambda * m.mean_delay).abs() < 1e-9 * m.mean_queue.max(1.0));
        }
    }

    #[test]
    fn finite_buffer_without_queue_is_erlang_b(lambda in 0.1f64..100.0, s in 1u64..120) {
        let m = QueueModel::mmsn(lambda, s, s).measures().unwrap();
        let b = erlang_b(s, lambda).unwrap();
        prop_assert!((m.block_prob.unwrap() - b).abs() < 1e-12);
    }
}

#[test]
fn poisson_tails_match_direct_sums() {
    for m in [0.5, 1.0, 4.0, 20.0] {
        for c in 0..=100usize {
            let t = poisson_tail(m, c as u64).unwrap();
            let (geq, gt) = common::brute_tail(m, c);
            assert!((t.p_geq - geq).abs() < 1e-12, "m={m} c={c}");
            assert!((t.p_gt - gt).abs() < 1e-12, "m={m} c={c}");
        }
    }
}

#[test]
fn pois_plus_matches_direct_sums() {
    for m in [0.5, 2.0, 10.0, 50.0] {
        for c in 0..=(3.0 * m) as usize + 10 {
            let p = pois_plus_stats(m, c as u64).unwrap();
            let want = common::brute_plus_mean(m, c);
            assert!((p.plus_mean - want).abs() < 1e-12 * want.max(1.0), "m={m} c={c}");
        }
    }
}

#[test]
fn erlang_monotone_in_servers_and_load() {
    for lambda in [0.5f64, 3.2, 9.5, 40.0, 250.0] {
        let first = lambda.floor() as u64 + 1;
        let mut prev_b = erlang_b(first - 1, lambda).unwrap_or(1.0);
        let mut prev_c = 1.0;
        for s in first..first + 60 {
            let b = erlang_b(s, lambda).unwrap();
            let c = erlang_c(s, lambda).unwrap();
            assert!(b < prev_b && c < prev_c, "λ={lambda} s={s}");
            prev_b = b;
            prev_c = c;
        }
    }
    for s in [1u64, 4, 20, 200] {
        let mut prev = 0.0;
        for k in 20..100 {
            let lambda = s as f64 * k as f64 / 100.0;
            let c = erlang_c(s, lambda).unwrap();
            assert!(c > prev && c >= erlang_b(s, lambda).unwrap(), "s={s} λ={lambda}");
            prev = c;
        }
    }
}

#[test]
fn d_auria_on_ladder_and_grid() {
    for lambda in [0.25f64, 1.0, 3.2, 10.0, 77.0, 500.0, 5000.0] {
        let sq = lambda.sqrt();
        let first = lambda.floor() as u64 + 1;
        for s in first..=(lambda + 3.0 * sq).ceil() as u64 {
            let beta = (s as f64 - lambda) / sq;
            if beta < 0.1 {
                continue;
            }
            assert!(erlang_c(s, lambda).unwrap() >= g(beta).unwrap(), "s={s} λ={lambda}");
        }
    }
}

#[test]
fn ladder_bounds_and_correction() {
    for row in bounds_table().unwrap() {
        assert!(row.lower <= row.exact && row.exact <= row.upper, "s={}", row.s);
        let b = qed_bounds(row.s, row.lambda).unwrap();
        assert!(b.gamma_s < b.alpha && b.alpha < 1.0);
        let corrected = corrected_delay(row.s, row.lambda).unwrap();
        assert!((corrected - row.exact).abs() < (g(1.0).unwrap() - row.exact).abs(), "s={}", row.s);
    }
    let rows = bounds_table().unwrap();
    assert_eq!(rows.len(), LADDER.len());
    for w in rows.windows(2) {
        assert!(w[1].rel_gap < w[0].rel_gap && w[1].upper - w[1].lower < w[0].upper - w[0].lower);
    }
    assert!((load_for_servers(20.0, 1.0) - 16.0).abs() < 1e-12);
}

#[test]
fn qed_functions_strictly_decreasing() {
    let grid: Vec<f64> = (1..=400).map(|k| k as f64 * 0.01).collect();
    for w in grid.windows(2) {
        assert!(g(w[1]).unwrap() < g(w[0]).unwrap());
        assert!(h(w[1]).unwrap() < h(w[0]).unwrap());
        assert!(loss_coefficient(w[1]).unwrap() < loss_coefficient(w[0]).unwrap());
    }
    assert!(g(1e-8).unwrap() > 1.0 - 1e-7 && g(40.0).unwrap() < 1e-300);
    assert!((h(1e-6).unwrap() * 1e-6 - 1.0).abs() < 1e-5);
    let mut prev = f64::NEG_INFINITY;
    for k in 1..1000 {
        let q = normal_quantile(k as f64 / 1000.0).unwrap();
        assert!(q > prev);
        prev = q;
    }
}

#[test]
fn diffusion_law_is_normalised() {
    for beta in [0.1, 0.5, 1.0, 2.0] {
        let law = hw_diffusion_stationary(beta).unwrap();
        let below = integrate(|x| law.density_below(x), -40.0, 0.0, 1e-13, 1e-12).unwrap();
        assert!((below.value - 1.0).abs() < 1e-10, "β={beta}");
        let above = integrate(|x| beta * (-beta * x).exp(), 0.0, 60.0 / beta, 1e-13, 1e-12).unwrap();
        assert!((above.value - 1.0).abs() < 1e-10);
        let mean = integrate(|x| x * law.density_below(x), -40.0, 0.0, 1e-13, 1e-12).unwrap();
        assert!((mean.value - law.mean_below()).abs() < 1e-9);
        assert!((law.cdf_below(0.0).unwrap() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn erlang_a_limit_moves_away_from_half() {
    let mut prev = 0.0;
    for k in 1..=30 {
        let beta = k as f64 * 0.1;
        let dev = (garnett_limits(beta, 1.0).unwrap().delay_prob - 0.5).abs();
        assert!(dev > prev, "β={beta}");
        prev = dev;
    }
    assert!((garnett_limits(0.0, 1.0).unwrap().delay_prob - 0.5).abs() < 1e-12);
}

#[test]
fn random_walk_mean_below_exponential_bound() {
    for k in 1..=60 {
        let beta = k as f64 * 0.05;
        let c = grw_constants(beta).unwrap();
        assert!(c.mean_max <= 1.0 / (2.0 * beta), "β={beta}");
        assert!(c.p_zero > 0.0 && c.p_zero < 1.0);
    }
}

#[test]
fn bulk_converges_to_random_walk_limit() {
    let limit = grw_constants(0.5).unwrap();
    let mut prev_p = f64::INFINITY;
    let mut prev_m = f64::INFINITY;
    for lambda in [4.0f64, 16.0, 36.0, 100.0] {
        let s = (lambda + 0.5 * lambda.sqrt()) as u64;
        let b = bulk_stationary(&BulkModel::new(lambda, s)).unwrap();
        let dp = (b.p_empty - limit.p_zero).abs();
        let dm = (b.mean_queue_over_sqrt_s - limit.mean_max).abs();
        assert!(dp < prev_p && dm < prev_m, "λ={lambda} dp={dp} dm={dm}");
        prev_p = dp;
        prev_m = dm;
    }
}

#[test]
fn spitzer_series_matches_value_iteration() {
    for lambda in [0.5f64, 1.0, 2.0, 4.0, 7.5, 10.0] {
        let first = lambda.floor() as u64 + 1;
        for s in first..first + 3 {
            let series = bulk_stationary(&BulkModel::new(lambda, s)).unwrap();
            let oracle = common::lindley_value_iteration(lambda, s as usize);
            assert!((series.p_empty - oracle.p_empty).abs() < 1e-6, "λ={lambda} s={s}");
            assert!((series.mean_queue - oracle.mean).abs() < 1e-6, "λ={lambda} s={s}");
        }
    }
}
