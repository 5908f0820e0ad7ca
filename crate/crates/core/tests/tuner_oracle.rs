//! The candidate-set search against brute-force re-evaluation.

use asus_core::kernel::{sure, universal_threshold};
use asus_core::tuner::{
    fit_asus, fit_partition, fit_sureshrink_with, tau_grid, threshold_candidates,
};
use asus_core::{DataBatch, HyperParams, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_batch(rng: &mut ChaCha8Rng) -> DataBatch {
    let n = rng.random_range(5..=200);
    let p = rng.random_range(0.02..0.6);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut y = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for _ in 0..n {
        let signal = rng.random_bool(p);
        let theta = if signal {
            rng.random_range(-5.0..5.0)
        } else {
            0.0
        };
        let sd = rng.random_range(0.3..2.0);
        y.push(theta + sd * normal.sample(rng));
        sigma.push(sd);
        s.push(if signal { 2.0 } else { 0.0 } + normal.sample(rng));
    }
    DataBatch::new(y, sigma, s).unwrap()
}

#[test]
fn candidate_minimum_is_never_beaten_by_a_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SearchConfig::new(1).with_hybrid(false);
    for case in 0..100 {
        let b = random_batch(&mut rng);
        let t_n = universal_threshold(b.len()).unwrap();
        let fit = fit_sureshrink_with(&b, &cfg).unwrap();
        let best = fit.sure_value.unwrap();
        let dense = (0..=10_000)
            .map(|i| {
                let t = t_n * i as f64 / 10_000.0;
                sure(&b, &HyperParams::single(t).unwrap())
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= dense + 1e-12, "case {case}: {best} > {dense}");

        let z: Vec<f64> = (0..b.len()).map(|i| b.z(i)).collect();
        let exhaustive = threshold_candidates(&z, t_n)
            .into_iter()
            .map(|t| sure(&b, &HyperParams::single(t).unwrap()))
            .fold(f64::INFINITY, f64::min);
        assert!((best - exhaustive).abs() <= 1e-12, "case {case}");
    }
}

#[test]
fn two_groups_never_lose_to_one_without_hybrid() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let b = random_batch(&mut rng);
        let one = fit_sureshrink_with(&b, &SearchConfig::new(1).with_hybrid(false)).unwrap();
        let two = fit_asus(&b, &SearchConfig::new(2).with_hybrid(false)).unwrap();
        assert!(
            two.sure_value.unwrap() <= one.sure_value.unwrap() + 1e-12,
            "case {case}"
        );
    }
}

#[test]
fn two_group_search_matches_brute_force_over_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..30 {
        let b = random_batch(&mut rng);
        let cfg = SearchConfig::new(2);
        let fit = fit_asus(&b, &cfg).unwrap();
        let brute = tau_grid(b.s(), cfg.mn_factor)
            .unwrap()
            .into_iter()
            .filter_map(|tau| {
                let lo = b.s().iter().filter(|&&v| v <= tau).count();
                if lo == 0 || lo == b.len() {
                    return None;
                }
                fit_partition(&b, b.s(), &[tau], &cfg).ok()
            })
            .filter_map(|f| f.sure_value)
            .fold(f64::INFINITY, f64::min);
        let got = fit.sure_value.unwrap();
        assert!(
            (got - brute).abs() <= 1e-12,
            "case {case}: {got} vs {brute}"
        );
    }
}
