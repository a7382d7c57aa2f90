//! Analytic photon statistics checked against Monte-Carlo oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use spad_gate_core::mc::{estimate_moments_mc, estimate_pmf, simulate_model_frame, ReceiverModel};
use spad_gate_core::photon_stats::{
    corr_first_adjacent, corr_first_nonadjacent, count_stats, free_running_stats,
};
use spad_gate_core::{GateTiming, PhotonRate, RatePair};

const NS: f64 = 1e-9;

fn rate(hz: f64) -> PhotonRate {
    PhotonRate::new(hz).unwrap()
}

// Gate-ON arrivals of a Poisson stream restricted to `windows` (sorted,
// disjoint), then the paralyzable rule applied by hand. Returns the detected
// times.
fn detect_in_windows(
    rng: &mut ChaCha8Rng,
    lambda: f64,
    td: f64,
    windows: &[(f64, f64)],
) -> Vec<f64> {
    let exp = Exp::new(lambda).unwrap();
    let mut on = Vec::new();
    for &(a, b) in windows {
        let mut t = a + exp.sample(rng);
        while t < b {
            on.push(t);
            t += exp.sample(rng);
        }
    }
    let mut detected = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for t in on {
        if t - last >= td {
            detected.push(t);
        }
        last = t;
    }
    detected
}

// Mean and standard error of a per-trial statistic over `trials` runs.
fn mc_mean<F>(trials: u64, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = 100u64;
    let per = trials / chunks;
    let (s, s2) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(c));
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..per {
                let x = f(&mut rng);
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = (per * chunks) as f64;
    let m = s / n;
    (m, ((s2 / n - m * m) / n).sqrt())
}

// Product of the first-segment detection and the detection in the segment
// starting `gap` dead times later, with the current gate stretched to cover
// both. History gates come from `timing`.
fn segment_product(
    timing: &GateTiming,
    lambda: f64,
    t: f64,
    gap: f64,
    trials: u64,
    seed: u64,
) -> (f64, f64) {
    let (ts, tg, td) = (timing.symbol_period(), timing.gate_on(), timing.dead_time());
    let start = gap * td;
    let mut windows = Vec::new();
    let mut k = ((td / ts).ceil() as i64).max(1);
    while k >= 1 {
        let a = -(k as f64) * ts;
        windows.push((a, a + tg));
        k -= 1;
    }
    windows.push((0.0, start + t));
    mc_mean(trials, seed, |rng| {
        let d = detect_in_windows(rng, lambda, td, &windows);
        let first = d.iter().any(|&x| (0.0..td).contains(&x));
        let later = d.iter().any(|&x| x >= start && x < start + t);
        if first && later {
            1.0
        } else {
            0.0
        }
    })
}

#[test]
fn first_segment_correlations_match_simulation() {
    let lambda = 5e8;
    let t = 8.0 * NS;
    for (i, &(ts, tg)) in [(20.0, 8.0), (20.0, 16.0)].iter().enumerate() {
        let timing = GateTiming::from_ns(ts, tg, 10.0).unwrap();
        let c = corr_first_adjacent(t, rate(lambda), &timing).unwrap();
        let (m, se) = segment_product(&timing, lambda, t, 1.0, 10_000_000, 11 + i as u64);
        assert!(
            (c - m).abs() <= 3.0 * se,
            "adjacent {tg}: analytic {c}, mc {m} ± {se}"
        );

        let d = corr_first_nonadjacent(t, rate(lambda), &timing).unwrap();
        let (m, se) = segment_product(&timing, lambda, t, 2.0, 10_000_000, 21 + i as u64);
        assert!(
            (d - m).abs() <= 3.0 * se,
            "nonadjacent {tg}: analytic {d}, mc {m} ± {se}"
        );
    }
}

#[test]
fn second_moment_matches_simulation_in_isi_regime() {
    let timing = GateTiming::from_ns(20.0, 16.0, 10.0).unwrap();
    let s = count_stats(rate(5e8), &timing).unwrap();
    let mc = estimate_moments_mc(rate(5e8), &timing, 10_000_000, 3).unwrap();
    assert!(
        (s.mean - mc.stats.mean).abs() <= 3.0 * mc.mean_se,
        "{s:?} vs {mc:?}"
    );
    assert!(
        (s.variance - mc.stats.variance).abs() <= 3.0 * mc.variance_se,
        "{s:?} vs {mc:?}"
    );
}

#[test]
fn low_rate_variance_matches_simulation() {
    for tg in [2.0, 6.0, 10.0, 14.0, 20.0] {
        let timing = GateTiming::from_ns(20.0, tg, 10.0).unwrap();
        let s = count_stats(rate(1e7), &timing).unwrap();
        let mc = estimate_moments_mc(rate(1e7), &timing, 1_000_000, 5).unwrap();
        let rel = (s.variance - mc.stats.variance).abs() / mc.stats.variance;
        assert!(rel < 0.05, "tg={tg}: {s:?} vs {mc:?}");
    }
}

#[test]
fn mean_trends_in_tg() {
    let mean_at = |lambda: f64, tg: f64| {
        let t = GateTiming::from_ns(20.0, tg, 10.0).unwrap();
        estimate_moments_mc(rate(lambda), &t, 1_000_000, 8)
            .unwrap()
            .stats
            .mean
    };
    let low: Vec<f64> = [2.0, 6.0, 10.0, 14.0, 18.0]
        .iter()
        .map(|&tg| mean_at(1e7, tg))
        .collect();
    assert!(low.windows(2).all(|w| w[1] > w[0]), "{low:?}");
    let high: Vec<f64> = [10.5, 12.0, 14.0]
        .iter()
        .map(|&tg| mean_at(5e8, tg))
        .collect();
    assert!(high.windows(2).all(|w| w[1] < w[0]), "{high:?}");
}

// Batch means of a correlated series: (mean, se of mean).
fn batch_mean(xs: &[u32], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .map(|c| c.iter().map(|&k| k as f64).sum::<f64>() / size as f64)
        .collect();
    let b = means.len() as f64;
    let m = means.iter().sum::<f64>() / b;
    let v = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b - 1.0);
    (m, (v / b).sqrt())
}

#[test]
fn free_running_constant_ones_hit_closed_form() {
    let (l0, l1) = (2e7, 1.5e8);
    let timing = GateTiming::from_ns(20.0, 20.0, 10.0).unwrap();
    let model = ReceiverModel::new(RatePair::new(l0, l1).unwrap(), 1, timing).unwrap();
    let counts = simulate_model_frame(&model, &vec![true; 1_000_000], 10, 17).counts;
    let (m, se) = batch_mean(&counts, 1000);
    let expect = l1 * 20.0 * NS * (-l1 * 10.0 * NS).exp();
    assert!((m - expect).abs() <= 4.0 * se, "{m} ± {se} vs {expect}");
    let closed = free_running_stats(rate(l1), 20.0 * NS, 10.0 * NS).unwrap();
    assert!((closed.mean - expect).abs() < 1e-12);
}

#[test]
fn random_data_pmf_is_biased_against_stationary_moments() {
    let timing = GateTiming::from_ns(50.0, 50.0, 10.0).unwrap();
    let (l0, l1) = (2e7, 7e7);
    let model = ReceiverModel::new(RatePair::new(l0, l1).unwrap(), 64, timing).unwrap();
    let one = estimate_pmf(&model, true, 100_000, 4).unwrap();
    let zero = estimate_pmf(&model, false, 100_000, 4).unwrap();
    let stationary_one = 64.0 * l1 * 50.0 * NS * (-l1 * 10.0 * NS).exp();
    assert!((one.approx_mean - stationary_one).abs() < 1e-9);
    assert!(
        one.exact.mean() > stationary_one,
        "{} vs {stationary_one}",
        one.exact.mean()
    );
    assert!(
        zero.exact.mean() < zero.approx_mean,
        "{} vs {}",
        zero.exact.mean(),
        zero.approx_mean
    );
    for p in [&one, &zero] {
        assert!((p.exact.total() - 1.0).abs() < 1e-12);
    }
}
