mod common;

use branchdiff::mc_engine::{replica_rng, simulate_replica_snapshots};
use branchdiff::{run_ensemble, EnsembleConfig, RateField, Region};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn config(replicas: usize, t_end: f64, obs_times: Vec<f64>, seed: u64, x0: Vec<f64>) -> EnsembleConfig {
    EnsembleConfig {
        replicas,
        t_end,
        obs_times,
        cap: 1_000_000,
        seed,
        x0,
        regions: vec![],
        windows: vec![],
    }
}

/// Pearson statistic against `P(N = n) = p(1-p)^{n-1}`, with bins merged
/// so that each expects at least five counts.
fn geometric_chi_square(counts: &[u64], p: f64) -> (f64, usize) {
    let total = counts.len() as f64;
    let mut stat = 0.0;
    let mut bins = 0;
    let mut n = 1u64;
    let mut cum = 0.0;
    loop {
        let prob = p * (1.0 - p).powi(n as i32 - 1);
        let expected = total * prob;
        if total * (1.0 - cum - prob) < 5.0 || expected < 5.0 {
            let observed = counts.iter().filter(|&&c| c >= n).count() as f64;
            let expected = total * (1.0 - cum);
            stat += (observed - expected).powi(2) / expected;
            bins += 1;
            break;
        }
        let observed = counts.iter().filter(|&&c| c == n).count() as f64;
        stat += (observed - expected).powi(2) / expected;
        bins += 1;
        cum += prob;
        n += 1;
    }
    (stat, bins)
}

#[test]
fn constant_rate_gives_geometric_counts() {
    let f = RateField::square_well(1, 1.0, 1e6).unwrap();
    let t = 2.0;
    let s = run_ensemble(&f, &config(4000, t, vec![1.0, t], 17, vec![0.0]), None).unwrap();
    for (k, &tk) in [1.0, t].iter().enumerate() {
        let counts: Vec<u64> = s.replicas.iter().map(|r| r.counts[k]).collect();
        let (stat, bins) = geometric_chi_square(&counts, (-tk).exp());
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "t={tk}: chi2={stat} on {bins} bins, p={p}");
    }
}

#[test]
fn no_branch_probability_matches_killed_diffusion() {
    let (beta, a, t) = (1.0, 1.0, 2.0);
    let f = RateField::square_well(1, beta, a).unwrap();
    for x0 in [0.0, 1.5, 3.0] {
        let s = run_ensemble(&f, &config(20_000, t, vec![t], 5, vec![x0]), None).unwrap();
        let single: Vec<f64> = s
            .replicas
            .iter()
            .map(|r| f64::from(u8::from(r.counts[0] == 1)))
            .collect();
        let m = single.iter().sum::<f64>() / single.len() as f64;
        let se = (m * (1.0 - m) / single.len() as f64).sqrt();
        let exact = common::no_branch_probability_line(beta, a, t, x0);
        assert!((m - exact).abs() < 4.0 * se, "x0={x0}: {m} ± {se} vs {exact}");
    }
}

#[test]
fn no_branch_probability_from_far_away_in_three_dimensions() {
    // starting far outside, the particle must first hit the ball; with a
    // large rate it then branches almost at once, so P(N_t > 1) is close to
    // the hitting probability (a/r) erfc((r - a)/√(2t)) of 3-d Brownian motion
    let (a, r, t) = (1.0, 4.0, 3.0);
    let f = RateField::square_well(3, 400.0, a).unwrap();
    let mut cfg = config(20_000, t, vec![t], 9, vec![r, 0.0, 0.0]);
    cfg.cap = 50;
    let s = run_ensemble(&f, &cfg, None).unwrap();
    let hit: Vec<f64> = s.replicas.iter().map(|x| f64::from(u8::from(x.branches > 0))).collect();
    let m = hit.iter().sum::<f64>() / hit.len() as f64;
    let exact = a / r * statrs::function::erf::erfc((r - a) / (2.0 * t).sqrt());
    let se = (m * (1.0 - m) / hit.len() as f64).sqrt();
    // the branching delay after the hit only lowers the fraction
    assert!(m <= exact + 4.0 * se, "{m} vs {exact}");
    assert!(m >= 0.9 * exact, "{m} vs {exact}");
}

fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn free_motion_is_gaussian() {
    let n = 4000;
    let t = 2.0;
    for (field, x0) in [
        (RateField::zero(2), vec![0.5, -1.0]),
        // far from a ball of radius 1 the motion must still be exact
        (RateField::square_well(3, 1.0, 1.0).unwrap(), vec![8.0, 0.0, 0.0]),
    ] {
        let dim = x0.len();
        let mut coords = vec![Vec::with_capacity(n); dim];
        for k in 0..n {
            let mut rng = replica_rng(23, k as u64);
            let (snaps, _) = simulate_replica_snapshots(&field, &x0, t, &[t], 10, &mut rng);
            assert_eq!(snaps[0].len(), 1);
            for (c, v) in coords.iter_mut().zip(snaps[0].particles().next().unwrap()) {
                c.push(*v);
            }
        }
        for (j, c) in coords.into_iter().enumerate() {
            let law = Normal::new(x0[j], t.sqrt()).unwrap();
            let d = ks_statistic(c, |x| law.cdf(x));
            // 1% critical value of the one-sample Kolmogorov-Smirnov test
            assert!(d < 1.63 / (n as f64).sqrt(), "dim {dim} coordinate {j}: D = {d}");
        }
    }
}

#[test]
fn counts_are_consistent() {
    let f = RateField::square_well(1, 1.0, 1.0).unwrap();
    let mut cfg = config(200, 6.0, vec![1.0, 2.0, 4.0, 6.0], 3, vec![0.0]);
    cfg.regions = vec![
        Region::interval(f64::NEG_INFINITY, 0.0),
        Region::interval(0.0, f64::INFINITY),
    ];
    let s = run_ensemble(&f, &cfg, None).unwrap();
    for r in &s.replicas {
        assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..r.counts.len() {
            assert_eq!(r.region_counts[0][k] + r.region_counts[1][k], r.counts[k]);
        }
        assert!(r.counts[0] - 1 <= r.branches);
    }
}

#[test]
fn ensembles_are_reproducible_and_thread_independent() {
    let f = RateField::square_well(2, 1.5, 1.0).unwrap();
    let cfg = config(64, 3.0, vec![1.0, 3.0], 99, vec![0.2, 0.0]);
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&f, &cfg, None).unwrap())
    };
    let a = run_with(1);
    let b = run_with(4);
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed = 100;
    assert_ne!(run_ensemble(&f, &other, None).unwrap().replicas, a.replicas);
}
