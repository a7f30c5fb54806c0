//! Property suites run by `tartar verify`. Each returns a measured value
//! and the threshold it was held to.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tartar::cones::{bootstrap_with, mu_schedule, BootstrapParams, ConeAnalysis};
use tartar::laminate::{build, LaminateSpec};
use tartar::oracle::{all_fields, direct_minimum, naive_forward};
use tartar::square::{eval_g, eval_h};
use tartar::{
    elastic_energy, CouplingPolys, DiagMatrix, GradientScheme, Grid, Phase, PhaseField, ScalarField,
};

use crate::config::VerifyConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Property {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    /// `threshold - measured`; negative when the property failed.
    pub slack: f64,
}

impl Property {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: measured <= threshold,
            measured,
            threshold,
            slack: threshold - measured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub all_pass: bool,
    pub properties: Vec<Property>,
}

impl VerifyReport {
    pub fn failed(&self) -> usize {
        self.properties.iter().filter(|p| !p.pass).count()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn roundtrip(fields: usize, seed: u64) -> CliResult<Property> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for n in [8, 16, 32] {
        let grid = Grid::new(n)?;
        for _ in 0..fields {
            let f = ScalarField::random(grid, &mut r);
            let back = f.forward().inverse();
            worst = worst.max((back.sub(&f)?.norm_sq() / f.norm_sq()).sqrt());
        }
    }
    Ok(Property::at_most("fft-round-trip", worst, 1e-10))
}

/// Parseval on the fast transform and on the double-sum oracle, plus the
/// largest coefficient disagreement between the two.
pub fn parseval(fields: usize, n: usize, seed: u64) -> CliResult<Vec<Property>> {
    let grid = Grid::new(n)?;
    let mut r = rng(seed);
    let (mut rel, mut coeff): (f64, f64) = (0.0, 0.0);
    for _ in 0..fields {
        let f = ScalarField::random(grid, &mut r);
        let fast = f.forward();
        let slow = naive_forward(f.values(), n);
        let direct = f.norm_sq();
        let slow_sum: f64 = slow.iter().map(|c| c.norm_sqr()).sum();
        rel = rel
            .max((fast.norm_sq() - direct).abs() / direct)
            .max((slow_sum - direct).abs() / direct);
        for (a, b) in fast.coeffs().iter().zip(&slow) {
            coeff = coeff.max((a - b).norm());
        }
    }
    Ok(vec![
        Property::at_most("parseval", rel, 1e-10),
        Property::at_most("fft-vs-double-sum", coeff, 1e-12),
    ])
}

/// Largest relative gap between the multiplier energy and the CG minimum
/// of the direct functional.
pub fn oracle_equivalence(fields: usize, n: usize, seed: u64) -> CliResult<Property> {
    let grid = Grid::new(n)?;
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..fields {
        let chi = PhaseField::random(grid, &mut r);
        let f = chi.mean_matrix();
        let fast = elastic_energy(&chi, &f);
        let slow = direct_minimum(&chi, &f, GradientScheme::Spectral).energy;
        worst = worst.max((fast - slow).abs() / fast.max(f64::MIN_POSITIVE));
    }
    Ok(Property::at_most("oracle-equivalence", worst, 1e-8))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidityCount {
    pub fields: usize,
    pub zero_energy: usize,
    pub zero_energy_nonconstant: usize,
    pub constant_nonzero: usize,
}

impl RigidityCount {
    pub fn holds(&self) -> bool {
        self.zero_energy_nonconstant == 0 && self.constant_nonzero == 0
    }
}

fn tally(fields: impl Iterator<Item = PhaseField>) -> RigidityCount {
    let mut c = RigidityCount { fields: 0, zero_energy: 0, zero_energy_nonconstant: 0, constant_nonzero: 0 };
    for chi in fields {
        let zero = elastic_energy(&chi, &chi.mean_matrix()) == 0.0;
        c.fields += 1;
        c.zero_energy += zero as usize;
        c.zero_energy_nonconstant += (zero && !chi.is_constant()) as usize;
        c.constant_nonzero += (!zero && chi.is_constant()) as usize;
    }
    c
}

pub fn rigidity_exhaustive() -> CliResult<RigidityCount> {
    Ok(tally(all_fields(Grid::new(2)?)))
}

pub fn rigidity_sampled(samples: usize, seed: u64) -> CliResult<RigidityCount> {
    let grid = Grid::new(4)?;
    let mut r = rng(seed);
    Ok(tally((0..samples).map(|_| PhaseField::random(grid, &mut r))))
}

/// Largest pointwise error of `g(chi22) = chi11` and `h(chi11) = chi22`.
pub fn coupling_error(fields: &[PhaseField]) -> f64 {
    let polys = CouplingPolys::tartar();
    let mut worst = polys.g.eval(0.0).abs().max(polys.h.eval(0.0).abs());
    for field in fields {
        let (c11, c22) = field.to_diag_fields();
        let lifted = c22.map(eval_g);
        let lowered = c11.map(eval_h);
        for i in 0..c11.values().len() {
            worst = worst
                .max((lifted.values()[i] - c11.values()[i]).abs())
                .max((lowered.values()[i] - c22.values()[i]).abs());
        }
    }
    worst
}

/// Laminates of order 1..=4 at `r = 1/4` on an `n x n` grid.
pub fn laminate_family(n: usize) -> CliResult<Vec<PhaseField>> {
    (1..=4)
        .map(|m| Ok(build(&LaminateSpec::new(m, 0.25, DiagMatrix::ZERO, n)?)?.0))
        .collect()
}

/// Two-phase stripes in both directions for three well pairs.
pub fn stripe_family(n: usize) -> CliResult<Vec<PhaseField>> {
    let grid = Grid::new(n)?;
    let mut out = Vec::new();
    for (a, b) in [(Phase::A1, Phase::A2), (Phase::A1, Phase::A3), (Phase::A2, Phase::A4)] {
        for across in [true, false] {
            out.push(PhaseField::stripes(grid, a, b, 4, across)?);
        }
    }
    Ok(out)
}

pub const MU_GRID: [f64; 4] = [0.0625, 0.125, 0.25, 0.5];

/// Largest concentration ratio over the standard `(mu, mu2)` grid.
pub fn max_concentration_ratio(fields: &[PhaseField]) -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    for field in fields {
        let a = ConeAnalysis::new(field);
        let n = field.grid().n() as f64;
        for mu in MU_GRID {
            for mu2 in [n / 8.0, n / 4.0, n / 2.0] {
                let ratio = a.concentration(mu, mu2)?.ratio;
                worst = if ratio.is_finite() { worst.max(ratio) } else { f64::INFINITY };
            }
        }
    }
    Ok(worst)
}

/// On stripes one of the two residuals has its whole spectrum inside its
/// cone and must vanish exactly; returns the largest such residual.
pub fn in_cone_residual(stripes: &[PhaseField]) -> CliResult<f64> {
    let mut worst: f64 = 0.0;
    for field in stripes {
        let n = field.grid().n() as f64;
        let (r1, r2) = ConeAnalysis::new(field).residuals(0.25, n, n, 0.0)?;
        worst = worst.max(r1.min(r2));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapCheck {
    pub schedule_rel_err: f64,
    pub termination_ok: bool,
    pub steps_ok: bool,
    pub low_mode_ok: bool,
    pub max_c0: f64,
}

impl BootstrapCheck {
    pub fn holds(&self) -> bool {
        self.schedule_rel_err <= 1e-12 && self.termination_ok && self.steps_ok && self.low_mode_ok
    }
}

pub fn bootstrap_integrity(fields: &[PhaseField]) -> CliResult<BootstrapCheck> {
    let mut check = BootstrapCheck {
        schedule_rel_err: 0.0,
        termination_ok: true,
        steps_ok: true,
        low_mode_ok: true,
        max_c0: 0.0,
    };
    for (alpha, eps) in [(0.1, 1e-3), (0.25, 1e-3), (0.2, 1e-6)] {
        let p = BootstrapParams::new(alpha, eps)?;
        for (m, mu) in mu_schedule(&p, 16)? {
            let closed = (2f64.sqrt() * p.d as f64).powi(m as i32) * eps.powf(-1.0 + m as f64 * alpha);
            check.schedule_rel_err = check.schedule_rel_err.max((mu - closed).abs() / closed);
        }
        check.termination_ok &= p.termination_m() == 2 * (1.0 / (2.0 * alpha)).floor() as usize;
        for field in fields {
            let rep = bootstrap_with(&ConeAnalysis::new(field), &p)?;
            check.steps_ok &= rep.steps.len() == rep.termination_m;
            check.steps_ok &= rep.steps.iter().all(|s| s.amplification_ok);
            check.low_mode_ok &= rep.low_mode.satisfied && rep.low_mode.satisfied_improved;
            check.max_c0 = check.max_c0.max(rep.empirical_c0);
        }
    }
    check.termination_ok &= BootstrapParams::new(0.1, 1e-3)?.termination_m() == 10;
    Ok(check)
}

fn flag(name: &str, ok: bool) -> Property {
    Property::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
}

pub fn run(cfg: &VerifyConfig, seed: u64) -> CliResult<VerifyReport> {
    let mut properties = vec![roundtrip(cfg.parseval_fields, seed)?];
    properties.extend(parseval(cfg.parseval_fields, cfg.parseval_n, seed)?);
    properties.push(oracle_equivalence(cfg.oracle_fields, cfg.oracle_n, seed)?);

    let two = rigidity_exhaustive()?;
    properties.push(flag("rigidity-2x2-exhaustive", two.holds() && two.zero_energy == 4 && two.fields == 256));
    let four = rigidity_sampled(cfg.rigidity_samples, seed)?;
    properties.push(Property::at_most(
        "rigidity-4x4-sampled",
        (four.zero_energy_nonconstant + four.constant_nonzero) as f64,
        0.0,
    ));

    let laminates = laminate_family(cfg.laminate_n)?;
    let stripes = stripe_family(64)?;
    let mut random: Vec<PhaseField> = Vec::new();
    let mut r = rng(seed);
    for _ in 0..50 {
        random.push(PhaseField::random(Grid::new(16)?, &mut r));
    }
    let every: Vec<PhaseField> = laminates.iter().chain(&stripes).chain(&random).cloned().collect();
    properties.push(Property::at_most("coupling-exactness", coupling_error(&every), 0.0));

    let family: Vec<PhaseField> = laminates.iter().chain(&stripes).cloned().collect();
    properties.push(Property::at_most(
        "concentration-bounded",
        max_concentration_ratio(&family)?,
        cfg.concentration_bound,
    ));
    properties.push(Property::at_most("in-cone-residual-zero", in_cone_residual(&stripes)?, 0.0));

    let boot = bootstrap_integrity(&laminates)?;
    properties.push(Property::at_most("mu-schedule-closed-form", boot.schedule_rel_err, 1e-12));
    properties.push(flag("termination-index", boot.termination_ok));
    properties.push(flag("bootstrap-amplification", boot.steps_ok));
    properties.push(flag("low-mode-bound", boot.low_mode_ok));

    let all_pass = properties.iter().all(|p| p.pass);
    Ok(VerifyReport { all_pass, properties })
}
