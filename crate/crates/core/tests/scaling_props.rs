use proptest::prelude::*;
use tartar::scaling::{
    dyadic_eps_grid, fit_scaling, fixed_order_envelope, optimize_continuous, optimize_params,
    rate_functions, surrogate, sweep, windowed_power_slope, RateParams, M_CAP, P_MAX,
};

#[test]
fn frozen_optima() {
    // exhaustive-search values, frozen
    let cases = [(8, 4, 2, 0.375), (16, 5, 3, 0.171_875), (30, 6, 5, 0.0625), (60, 8, 7, 0.011_962_890_625)];
    for (k, m, p, e) in cases {
        let o = optimize_params(0.5f64.powi(k)).unwrap();
        assert_eq!((o.m, o.p), (m, p), "eps=2^-{k}");
        assert!((o.energy - e).abs() < 1e-15, "eps=2^-{k}: {}", o.energy);
    }
}

#[test]
fn optimum_tracks_root_log() {
    for eps in dyadic_eps_grid(16, 60) {
        let o = optimize_params(eps).unwrap();
        assert!(((o.m as f64) - (-eps.ln()).sqrt()).abs() <= 3.0, "{eps}: {}", o.m);
        assert!(o.m < M_CAP && o.p < P_MAX);
    }
}

#[test]
fn optimum_monotone_in_eps() {
    let grid = dyadic_eps_grid(4, 60);
    let energies: Vec<f64> = grid.iter().map(|&e| optimize_params(e).unwrap().energy).collect();
    assert!(energies.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn continuous_scale_never_loses() {
    for eps in dyadic_eps_grid(4, 60) {
        let (_, r, e) = optimize_continuous(eps).unwrap();
        assert!(r > 0.0 && r < 0.5);
        assert!(e <= optimize_params(eps).unwrap().energy + 1e-15);
    }
}

#[test]
fn envelopes_cross_once_and_bound_the_optimum() {
    let grid = dyadic_eps_grid(2, 60);
    let env = fixed_order_envelope(&[1, 3], &grid).unwrap();
    let (one, three) = env.split_at(grid.len());
    let signs: Vec<bool> = one.iter().zip(three).map(|(a, b)| a.energy < b.energy).collect();
    assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
    let orders: Vec<usize> = (1..=M_CAP).collect();
    for &eps in &grid[2..] {
        let all = fixed_order_envelope(&orders, &[eps]).unwrap();
        let best = all.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
        assert_eq!(best, optimize_params(eps).unwrap().energy);
    }
}

#[test]
fn infinite_order_beats_each_plateau() {
    let grid = dyadic_eps_grid(8, 60);
    for m in 1..=6usize {
        let plateau = 0.5f64.powi(m as i32);
        let tail = fixed_order_envelope(&[m], &[0.5f64.powi(60)]).unwrap()[0].energy;
        assert!(tail <= 2.0 * plateau);
        let env = fixed_order_envelope(&[m], &grid).unwrap();
        let wins = grid.iter().zip(&env).any(|(&eps, p)| optimize_params(eps).unwrap().energy < 0.9 * p.energy);
        assert!(wins, "m={m}");
    }
}

#[test]
fn rate_ordering() {
    let p = RateParams { c: 1.3, big_c: 1.3, nu: 0.25 };
    for k in 2..200 {
        let eps = (-(k as f64) / 2.0).exp();
        let (rn, r) = rate_functions(eps, &p).unwrap();
        assert!(rn <= r);
    }
}

#[test]
fn sweep_order_and_validation() {
    let eps = dyadic_eps_grid(4, 20);
    let recs = sweep(&eps, Some(4096)).unwrap();
    assert_eq!(recs.len(), eps.len());
    assert!(recs.iter().zip(&eps).all(|(r, e)| r.eps == *e));
    let validated: Vec<_> = recs.iter().filter(|r| r.e_grid.is_some()).collect();
    assert!(!validated.is_empty() && validated.len() < recs.len());
    // validation needs n = 4 / r^m, so it stops once the optimum refines
    let last = recs.iter().rposition(|r| r.n_grid.is_some()).unwrap();
    assert!(recs[..=last].iter().all(|r| r.n_grid.is_some()));
    for r in &validated {
        assert!(r.n_grid.unwrap() <= 4096);
        assert!(r.e_grid.unwrap() > r.e_surrogate);
    }
}

#[test]
fn surrogate_fit_is_root_log() {
    let recs = sweep(&dyadic_eps_grid(8, 60), None).unwrap();
    let fit = fit_scaling(&recs).unwrap();
    assert!(fit.r2 >= 0.98 && fit.slope < 0.0, "{fit:?}");
    let tail = windowed_power_slope(&recs, 0.5f64.powi(60), 0.5f64.powi(40)).unwrap();
    assert!(tail.abs() <= 0.15, "{tail}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_is_a_lower_bound(log_eps in -41.0f64..-1.0, m in 1usize..=64, p in 2u32..=40) {
        let eps = log_eps.exp();
        let best = optimize_params(eps).unwrap().energy;
        prop_assert!(best <= surrogate(m, 0.5f64.powi(p as i32), eps).unwrap());
    }

    #[test]
    fn surrogate_monotone_in_eps(m in 1usize..20, p in 2u32..20, a in 1e-30f64..0.4, b in 1e-30f64..0.4) {
        let r = 0.5f64.powi(p as i32);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(surrogate(m, r, lo).unwrap() <= surrogate(m, r, hi).unwrap());
    }
}
