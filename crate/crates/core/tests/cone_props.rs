use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tartar::cones::{
    bootstrap, bootstrap_with, low_mode_bound, mu_schedule, residual, residual_spectrum, truncate,
    truncate_spectrum, BootstrapParams, ConeAnalysis, ConeSpec,
};
use tartar::laminate::{build, Axis, LaminateSpec};
use tartar::square::{eval_g, eval_h};
use tartar::{CouplingPolys, DiagMatrix, Grid, Phase, PhaseField, ScalarField};

/// Recorded bound on the concentration ratio across the standard cone grid.
const CONCENTRATION_C: f64 = 1.0;

fn laminates() -> Vec<PhaseField> {
    (1..=4)
        .map(|m| build(&LaminateSpec::new(m, 0.25, DiagMatrix::ZERO, 1024).unwrap()).unwrap().0)
        .collect()
}

fn stripes() -> Vec<PhaseField> {
    let grid = Grid::new(64).unwrap();
    let pairs = [(Phase::A1, Phase::A2), (Phase::A1, Phase::A3), (Phase::A2, Phase::A4)];
    pairs
        .iter()
        .flat_map(|&(a, b)| [true, false].map(|ax| PhaseField::stripes(grid, a, b, 4, ax).unwrap()))
        .collect()
}

#[test]
fn concentration_bounded_on_grid() {
    for field in laminates().into_iter().chain(stripes()) {
        let a = ConeAnalysis::new(&field);
        let n = field.grid().n() as f64;
        for mu in [1.0 / 16.0, 0.125, 0.25, 0.5] {
            for mu2 in [n / 8.0, n / 4.0, n / 2.0] {
                let c = a.concentration(mu, mu2).unwrap();
                assert!(c.ratio.is_finite() && c.ratio <= CONCENTRATION_C, "{c:?}");
            }
        }
    }
}

#[test]
fn axis_exactness() {
    let grid = Grid::new(32).unwrap();
    let n = 32.0;
    // depends on x2 only: frequencies on the k2 axis, inside the axis-1 cone
    let f = ScalarField::sample(grid, |_, x2| (2.0 * std::f64::consts::PI * 3.0 * x2).sin() + x2);
    let c1 = ConeSpec::sharp(Axis::X1, 0.25, n).unwrap();
    let c2 = ConeSpec::sharp(Axis::X2, 0.25, n).unwrap();
    assert_eq!(residual(&f, &c1), 0.0);
    assert!(residual(&f, &c2) > 0.1);
    let g = ScalarField::sample(grid, |x1, _| (2.0 * std::f64::consts::PI * 5.0 * x1).cos() - x1);
    assert_eq!(residual(&g, &c2), 0.0);
    assert!(residual(&g, &c1) > 0.1);
}

#[test]
fn stripes_have_one_silent_component() {
    for field in stripes() {
        let n = field.grid().n() as f64;
        let a = ConeAnalysis::new(&field);
        let (r1, r2) = a.residuals(0.25, n, n, 0.0).unwrap();
        let varies_in_x1 = field.get(0, 0) != field.get(8, 0);
        if varies_in_x1 {
            assert_eq!(r2, 0.0);
            assert!(r1 > 0.0);
        } else {
            assert_eq!(r1, 0.0);
            assert!(r2 > 0.0);
        }
    }
}

#[test]
fn coupling_exact_on_all_fields() {
    let polys = CouplingPolys::tartar();
    assert_eq!(polys.g.eval(0.0), 0.0);
    assert_eq!(polys.h.eval(0.0), 0.0);
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut fields = laminates();
    fields.extend(stripes());
    fields.extend((0..50).map(|_| PhaseField::random(Grid::new(16).unwrap(), &mut r)));
    for field in fields {
        let (c11, c22) = field.to_diag_fields();
        assert_eq!(c22.map(eval_g).values(), c11.values());
        assert_eq!(c11.map(eval_h).values(), c22.values());
    }
}

#[test]
fn schedule_closed_form() {
    let p = BootstrapParams::new(0.25, 1e-3).unwrap();
    for (m, mu) in mu_schedule(&p, 12).unwrap() {
        let closed = (2f64.sqrt() * 3.0).powi(m as i32) * 1e-3f64.powf(-1.0 + 0.25 * m as f64);
        assert!((mu - closed).abs() <= 1e-12 * closed);
    }
    for (alpha, t) in [(0.1, 10), (0.25, 4), (0.2, 4), (0.3, 2), (0.15, 6), (0.45, 2)] {
        assert_eq!(BootstrapParams::new(alpha, 1e-3).unwrap().termination_m(), t);
    }
}

#[test]
fn schedule_termination_tracks_the_closed_form() {
    let p = BootstrapParams::new(0.1, 1e-300).unwrap();
    let m = p.schedule_termination().unwrap();
    assert!(m.abs_diff(p.termination_m() - 2) <= 1, "{m}");
}

#[test]
fn bootstrap_steps_hold_on_laminates() {
    for alpha in [0.1, 0.25] {
        let p = BootstrapParams::new(alpha, 1e-3).unwrap();
        for field in laminates() {
            let rep = bootstrap(&field, &p).unwrap();
            assert_eq!(rep.steps.len(), rep.termination_m);
            assert!(rep.steps.iter().all(|s| s.amplification_ok), "{rep:?}");
            assert!(rep.low_mode.satisfied && rep.low_mode.satisfied_improved);
            assert!(rep.empirical_c0 >= 2.0);
        }
    }
}

#[test]
fn constant_field_bootstrap_is_silent() {
    let field = PhaseField::constant(Grid::new(32).unwrap(), Phase::A3);
    let rep = bootstrap(&field, &BootstrapParams::new(0.1, 1e-3).unwrap()).unwrap();
    assert!(rep.steps.iter().all(|s| s.residual_f1 == 0.0 && s.residual_f2 == 0.0));
    assert_eq!(rep.low_mode.lhs, 0.0);
    assert!(rep.low_mode.satisfied);
}

#[test]
fn low_mode_arithmetic() {
    // delta = 0, beta = 4 through a hand-built analysis
    let field = PhaseField::stripes(Grid::new(16).unwrap(), Phase::A1, Phase::A3, 1, true).unwrap();
    let mut a = ConeAnalysis::new(&field);
    a.delta = 0.0;
    a.beta = 4.0;
    let p = BootstrapParams { alpha: 0.2, gamma: 0.04, d: 3, eps: 1e-4, nu: 0.5 };
    let rep = low_mode_bound(&a, &p, 10.0);
    let expect = ((40f64).ln() - 12.0 * 0.2f64.ln()) / 0.2 - 0.4 * 1e-4f64.ln() + 0.5 * (4e-4f64).ln();
    assert!((rep.ln_rhs - expect).abs() < 1e-12 * expect.abs());
    let alpha = (1e-4f64.ln().abs()).powf(-0.4);
    assert!((rep.alpha_opt - alpha).abs() < 1e-15);
    let _ = bootstrap_with(&a, &p).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncation_is_a_projection(seed in any::<u64>(), mu in 0.05f64..0.95, mu2 in 1.0f64..24.0, x1 in any::<bool>()) {
        let f = ScalarField::random(Grid::new(16).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed));
        let axis = if x1 { Axis::X1 } else { Axis::X2 };
        let c = ConeSpec::sharp(axis, mu, mu2).unwrap();
        let once = truncate_spectrum(&f.forward(), &c);
        let twice = truncate_spectrum(&once, &c);
        prop_assert_eq!(once.coeffs(), twice.coeffs());
        let kept = truncate(&f, &c);
        prop_assert!((kept.norm_sq() + residual(&f, &c) - f.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn residual_monotone_in_radius(seed in any::<u64>(), mu in 0.05f64..0.95, a in 1.0f64..24.0, b in 1.0f64..24.0) {
        let s = ScalarField::random(Grid::new(16).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed)).forward();
        let (lo, hi) = (a.min(b), a.max(b));
        for axis in [Axis::X1, Axis::X2] {
            let small = residual_spectrum(&s, &ConeSpec::sharp(axis, mu, lo).unwrap());
            let large = residual_spectrum(&s, &ConeSpec::sharp(axis, mu, hi).unwrap());
            prop_assert!(small >= large);
        }
    }

    #[test]
    fn coupling_on_random_fields(seed in any::<u64>()) {
        let field = PhaseField::random(Grid::new(8).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (c11, c22) = field.to_diag_fields();
        let (lifted, lowered) = (c22.map(eval_g), c11.map(eval_h));
        prop_assert_eq!(lifted.values(), c11.values());
        prop_assert_eq!(lowered.values(), c22.values());
    }
}
