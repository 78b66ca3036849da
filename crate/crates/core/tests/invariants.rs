use branchdiff::mc_engine::{replica_rng, simulate_replica_snapshots};
use branchdiff::{count_in, discretize, principal_eigenpair, resolvent_apply, Grid, RateField, Region};
use proptest::prelude::*;

fn well(dim: usize, beta: f64, extent: f64, n: usize) -> (branchdiff::OperatorMatrix, branchdiff::SpectralData) {
    let f = RateField::square_well(dim, beta, 1.0).unwrap();
    let m = discretize(&f, &Grid::new(dim, extent, n).unwrap()).unwrap();
    let s = principal_eigenpair(&m).unwrap();
    (m, s)
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_is_self_adjoint(dim in 1usize..5, f in vector(201), g in vector(201)) {
        let (m, _) = well(dim, 3.0, 10.0, 200);
        let grid = m.grid();
        let (f, g) = (&f[..grid.len()], &g[..grid.len()]);
        let lhs = grid.inner(f, &m.apply(g));
        let rhs = grid.inner(&m.apply(f), g);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn rayleigh_quotient_is_bounded_by_lambda0(dim in 1usize..4, f in vector(201)) {
        let (m, s) = well(dim, 3.0, 10.0, 200);
        let grid = m.grid();
        let f = &f[..grid.len()];
        let q = grid.inner(f, &m.apply(f)) / grid.inner(f, f);
        prop_assert!(q <= s.lambda0 * (1.0 + 1e-9));
    }

    #[test]
    fn resolvent_identity_and_positivity(g in proptest::collection::vec(0.0..1.0f64, 401), d1 in 0.05..2.0f64, d2 in 0.05..2.0f64) {
        let (m, s) = well(1, 1.0, 20.0, 400);
        let g = &g[..m.grid().len()];
        let (mu, nu) = (s.lambda0 + d1, s.lambda0 + d2);
        let rm = resolvent_apply(&m, mu, g).unwrap();
        let rn = resolvent_apply(&m, nu, g).unwrap();
        prop_assert!(rm.iter().all(|&x| x >= 0.0));
        // R(μ) - R(ν) = (ν - μ) R(μ) R(ν)
        let rmrn = resolvent_apply(&m, mu, &rn).unwrap();
        for i in 0..g.len() {
            let lhs = rm[i] - rn[i];
            let rhs = (nu - mu) * rmrn[i];
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rm[i].abs()));
        }
    }

    #[test]
    fn alpha_is_additive_on_the_line(a in -15.0..15.0f64, w1 in 0.0..10.0f64, w2 in 0.0..10.0f64) {
        let (_, s) = well(1, 1.0, 20.0, 800);
        let (b, c) = (a + w1, a + w1 + w2);
        let sum = s.alpha(&Region::interval(a, b)) + s.alpha(&Region::interval(b, c));
        prop_assert!((sum - s.alpha(&Region::interval(a, c))).abs() < 1e-12);
        let halves = s.alpha(&Region::interval(f64::NEG_INFINITY, a)) + s.alpha(&Region::interval(a, f64::INFINITY));
        prop_assert!((halves - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_is_monotone_in_balls(dim in 2usize..5, r1 in 0.1..8.0f64, dr in 0.0..4.0f64, off in 0.0..3.0f64) {
        let (_, s) = well(dim, 3.0, 25.0, 1000);
        let mut c = vec![0.0; dim];
        c[0] = off;
        let small = s.alpha(&Region::ball(c.clone(), r1));
        let big = s.alpha(&Region::ball(c, r1 + dr));
        prop_assert!(small <= big + 1e-9);
        prop_assert!((0.0..=1.0).contains(&small));
    }

    #[test]
    fn box_and_ball_agree_when_nested(dim in 2usize..4, r in 0.5..5.0f64) {
        // the ball of radius r lies inside the cube of half-width r, which
        // lies inside the ball of radius r√d
        let (_, s) = well(dim, 3.0, 25.0, 1000);
        let inner = s.alpha(&Region::ball(vec![0.0; dim], r));
        let cube = s.alpha(&Region::Box { lo: vec![-r; dim], hi: vec![r; dim] });
        let outer = s.alpha(&Region::ball(vec![0.0; dim], r * (dim as f64).sqrt()));
        prop_assert!(inner <= cube + 1e-6 && cube <= outer + 1e-6, "{inner} {cube} {outer}");
    }

    #[test]
    fn rate_is_rotation_invariant(dim in 2usize..5, x in vector(4), theta in 0.0..6.3f64) {
        let f = RateField::smooth_bump(dim, 2.0, 1.5).unwrap();
        let mut p: Vec<f64> = x[..dim].to_vec();
        let mut q = p.clone();
        q[0] = theta.cos() * p[0] - theta.sin() * p[1];
        q[1] = theta.sin() * p[0] + theta.cos() * p[1];
        let a = f.eval(&p).unwrap();
        let b = f.eval(&q).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        p.reverse();
        prop_assert!((f.eval(&p).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn counts_partition_and_never_decrease(seed in 0u64..1000, cut in -2.0..2.0f64) {
        let f = RateField::square_well(1, 1.0, 1.0).unwrap();
        let times = [0.5, 1.0, 2.0, 3.0];
        let mut rng = replica_rng(seed, 0);
        let (snaps, _) = simulate_replica_snapshots(&f, &[0.0], 3.0, &times, 100_000, &mut rng);
        let left = Region::interval(f64::NEG_INFINITY, cut);
        let right = Region::interval(cut, f64::INFINITY);
        let mut prev = 1;
        for s in &snaps {
            let n = s.len() as u64;
            prop_assert!(n >= prev);
            prev = n;
            let l = count_in(s, &left).unwrap();
            let r = count_in(s, &right).unwrap();
            prop_assert_eq!(l + r, n);
            prop_assert!(count_in(s, &Region::interval(-1.0, 1.0)).unwrap() <= n);
        }
    }
}

#[test]
fn lambda0_is_stable_under_domain_growth() {
    let (_, s) = well(1, 1.0, 12.0, 2400);
    let (_, t) = well(1, 1.0, 24.0, 4800);
    assert!((s.lambda0 / t.lambda0 - 1.0).abs() < 5e-3);
}
