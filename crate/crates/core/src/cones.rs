//! Frequency cones and the measured lower-bound chain.
//!
//! The axis-`i` cone of half-width `mu` and radius `mu2` keeps the integer
//! frequencies with `|k_i| <= mu |k|` and `|k| <= mu2`; `k = 0` is always
//! kept. Throughout, `f1 = chi22` is tested against axis-1 cones and
//! `f2 = g(f1) = chi11` against axis-2 cones.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{diag_spectra, h_minus1_seminorms, surface_energy};
use crate::error::{Error, Result};
use crate::field::{PhaseField, ScalarField, SpectralField};
use crate::laminate::Axis;
use crate::square::{CouplingPoly, CouplingPolys};
use crate::sum::{sum, Compensated};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub axis: Axis,
    pub mu: f64,
    pub mu2: f64,
    /// Width of the cosine ramp in `|k_axis| / |k|`; zero gives a sharp cone.
    pub smoothing: f64,
}

impl ConeSpec {
    pub fn new(axis: Axis, mu: f64, mu2: f64, smoothing: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidParams(format!("cone half-width {mu} not in (0, 1)")));
        }
        if !(mu2 > 0.0) || mu2.is_nan() {
            return Err(Error::InvalidParams(format!("cone radius {mu2} must be positive")));
        }
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::InvalidParams(format!("smoothing {smoothing} must be >= 0")));
        }
        Ok(Self { axis, mu, mu2, smoothing })
    }

    pub fn sharp(axis: Axis, mu: f64, mu2: f64) -> Result<Self> {
        Self::new(axis, mu, mu2, 0.0)
    }

    /// Multiplier value at integer frequency `(k1, k2)`.
    pub fn weight(&self, k1: i64, k2: i64) -> f64 {
        if k1 == 0 && k2 == 0 {
            return 1.0;
        }
        let k_sq = (k1 * k1 + k2 * k2) as f64;
        if k_sq > self.mu2 * self.mu2 {
            return 0.0;
        }
        let ka = match self.axis {
            Axis::X1 => k1,
            Axis::X2 => k2,
        } as f64;
        if self.smoothing == 0.0 {
            return if ka * ka <= self.mu * self.mu * k_sq { 1.0 } else { 0.0 };
        }
        let t = ka.abs() / k_sq.sqrt();
        if t <= self.mu {
            1.0
        } else if t >= self.mu + self.smoothing {
            0.0
        } else {
            0.5 * (1.0 + (PI * (t - self.mu) / self.smoothing).cos())
        }
    }
}

pub fn truncate_spectrum(s: &SpectralField, c: &ConeSpec) -> SpectralField {
    s.apply(|k1, k2| c.weight(k1, k2))
}

/// Inverse transform of the cone-filtered spectrum.
pub fn truncate(f: &ScalarField, c: &ConeSpec) -> ScalarField {
    truncate_spectrum(&f.forward(), c).inverse()
}

/// `sum_k (1 - w(k))^2 |s(k)|^2`, the squared L2 distance to the filtered field.
pub fn residual_spectrum(s: &SpectralField, c: &ConeSpec) -> f64 {
    let grid = s.grid();
    let n = grid.n();
    let rows: Vec<f64> = s
        .coeffs()
        .par_chunks(n)
        .enumerate()
        .map(|(i1, row)| {
            let mut acc = Compensated::new();
            for (i2, z) in row.iter().enumerate() {
                let (k1, k2) = grid.wavevector(i1 * n + i2);
                let w = 1.0 - c.weight(k1, k2);
                if w != 0.0 {
                    acc.add(w * w * z.norm_sqr());
                }
            }
            acc.value()
        })
        .collect();
    sum(rows)
}

pub fn residual(f: &ScalarField, c: &ConeSpec) -> f64 {
    residual_spectrum(&f.forward(), c)
}

fn l2_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).expect("same grid").norm_sq().sqrt()
}

/// Measured-versus-model pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl GapReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self { lhs, rhs, ratio }
    }
}

/// Spectra, `delta` and `beta` of a phase field, computed once.
#[derive(Debug, Clone)]
pub struct ConeAnalysis {
    pub chi11: ScalarField,
    pub chi22: ScalarField,
    pub spec11: SpectralField,
    pub spec22: SpectralField,
    /// `||d2 chi11||^2 + ||d1 chi22||^2` in the negative Sobolev norm.
    pub delta: f64,
    /// Surface energy.
    pub beta: f64,
    pub polys: CouplingPolys,
}

impl ConeAnalysis {
    pub fn new(chi: &PhaseField) -> Self {
        let (chi11, chi22) = chi.to_diag_fields();
        let (spec11, spec22) = diag_spectra(chi);
        let s = h_minus1_seminorms(chi);
        Self {
            chi11,
            chi22,
            spec11,
            spec22,
            delta: s.d2chi11 + s.d1chi22,
            beta: surface_energy(chi),
            polys: CouplingPolys::tartar(),
        }
    }

    /// `mu^-2 delta + mu2^-1 beta`.
    pub fn energy_scale(&self, mu: f64, mu2: f64) -> f64 {
        self.delta / (mu * mu) + self.beta / mu2
    }

    /// `(||f1 - axis-1 cone f1||^2, ||f2 - axis-2 cone f2||^2)`.
    pub fn residuals(&self, mu: f64, mu2_f1: f64, mu2_f2: f64, smoothing: f64) -> Result<(f64, f64)> {
        let c1 = ConeSpec::new(Axis::X1, mu, mu2_f1, smoothing)?;
        let c2 = ConeSpec::new(Axis::X2, mu, mu2_f2, smoothing)?;
        Ok((residual_spectrum(&self.spec22, &c1), residual_spectrum(&self.spec11, &c2)))
    }

    /// Mass concentration: residuals against `C (mu^-2 delta + mu2^-1 beta)`.
    pub fn concentration(&self, mu: f64, mu2: f64) -> Result<ConcentrationReport> {
        let (r1, r2) = self.residuals(mu, mu2, mu2, 0.0)?;
        let lhs = r1 + r2;
        let rhs_core = self.energy_scale(mu, mu2);
        let g = GapReport::new(lhs, rhs_core);
        Ok(ConcentrationReport {
            lhs,
            rhs_core,
            ratio: g.ratio,
        })
    }

    /// `||p(f) - p(trunc f)|| / ||f - trunc f||^(1-gamma)` for `f1` with `g`
    /// on the axis-1 cone, or `f2` with `h` on the axis-2 cone.
    pub fn lipschitz(&self, use_g: bool, c: &ConeSpec, gamma: f64) -> Result<GapReport> {
        let (f, s, poly) = if use_g {
            (&self.chi22, &self.spec22, &self.polys.g)
        } else {
            (&self.chi11, &self.spec11, &self.polys.h)
        };
        lipschitz_from_spectrum(f, s, poly, c, gamma)
    }

    /// `||g(trunc_1 f1) - trunc_2 g(f1)||^2` against `max(X^(1-gamma), X)`.
    pub fn comparison(&self, mu: f64, mu2: f64, gamma: f64) -> Result<GapReport> {
        check_gamma(gamma)?;
        let c1 = ConeSpec::sharp(Axis::X1, mu, mu2)?;
        let c2 = ConeSpec::sharp(Axis::X2, mu, mu2)?;
        let g = &self.polys.g;
        let lifted = truncate_spectrum(&self.spec22, &c1).inverse().map(|v| g.eval(v));
        let filtered = truncate_spectrum(&self.spec11, &c2).inverse();
        let lhs = lifted.sub(&filtered)?.norm_sq();
        let x = self.energy_scale(mu, mu2);
        Ok(GapReport::new(lhs, x.powf(1.0 - gamma).max(x)))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("gamma {gamma} not in (0, 1)")))
    }
}

fn lipschitz_from_spectrum(
    f: &ScalarField,
    s: &SpectralField,
    poly: &CouplingPoly,
    c: &ConeSpec,
    gamma: f64,
) -> Result<GapReport> {
    check_gamma(gamma)?;
    let truncated = truncate_spectrum(s, c).inverse();
    let lhs = l2_distance(&f.map(|v| poly.eval(v)), &truncated.map(|v| poly.eval(v)));
    let rhs = l2_distance(f, &truncated).powf(1.0 - gamma);
    Ok(GapReport::new(lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: f64,
}

pub fn verify_concentration(chi: &PhaseField, mu: f64, mu2: f64) -> Result<ConcentrationReport> {
    ConeAnalysis::new(chi).concentration(mu, mu2)
}

pub fn lipschitz_gap(f: &ScalarField, poly: &CouplingPoly, c: &ConeSpec, gamma: f64) -> Result<GapReport> {
    lipschitz_from_spectrum(f, &f.forward(), poly, c, gamma)
}

pub fn comparison_gap(chi: &PhaseField, mu: f64, mu2: f64, gamma: f64) -> Result<GapReport> {
    ConeAnalysis::new(chi).comparison(mu, mu2, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapParams {
    pub alpha: f64,
    pub gamma: f64,
    pub d: u32,
    pub eps: f64,
    pub nu: f64,
}

impl BootstrapParams {
    /// `gamma = alpha^2`, `d = 3`, `nu = 1/2`.
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        let p = Self {
            alpha,
            gamma: alpha * alpha,
            d: 3,
            eps,
            nu: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParams(what));
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad(format!("alpha {} not in (0, 1/2)", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma {} not in (0, 1)", self.gamma));
        }
        if self.d < 2 {
            return bad(format!("degree {} below 2", self.d));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("epsilon {} not in (0, 1)", self.eps));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu {} must be positive", self.nu));
        }
        Ok(())
    }

    /// Angular half-width `eps^alpha`.
    pub fn mu(&self) -> f64 {
        self.eps.powf(self.alpha)
    }

    /// Uncalibrated base radius `eps^(2 alpha - 1)`.
    pub fn mu2_base(&self) -> f64 {
        self.eps.powf(-1.0 + 2.0 * self.alpha)
    }

    /// `mu_m = (sqrt(2) d)^m eps^(m alpha - 1)`.
    pub fn mu_m(&self, m: usize) -> f64 {
        (2f64.sqrt() * self.d as f64).powi(m as i32) * self.eps.powf(-1.0 + m as f64 * self.alpha)
    }

    /// `2 floor(1 / (2 alpha))`.
    pub fn termination_m(&self) -> usize {
        2 * (1.0 / (2.0 * self.alpha)).floor() as usize
    }

    /// Smallest `m >= 0` with `mu_{m+2} < 1`, if reached within 10^4 steps.
    pub fn schedule_termination(&self) -> Option<usize> {
        (0..10_000).find(|&m| self.mu_m(m + 2) < 1.0)
    }
}

/// `(m, mu_m)` for `m = 2..=m_max`.
pub fn mu_schedule(p: &BootstrapParams, m_max: usize) -> Result<Vec<(usize, f64)>> {
    p.validate()?;
    if m_max < 2 {
        return Err(Error::InvalidParams(format!("schedule needs m_max >= 2, got {m_max}")));
    }
    Ok((2..=m_max).map(|m| (m, p.mu_m(m))).collect())
}

/// Lower even part of `m + 2`.
pub fn even_index(m: usize) -> usize {
    2 * ((m + 2) / 2)
}

/// Lower odd part of `m + 2`.
pub fn odd_index(m: usize) -> usize {
    2 * ((m + 1) / 2) + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStep {
    pub m: usize,
    pub m_e: usize,
    pub m_o: usize,
    pub mu_me: f64,
    pub mu_mo: f64,
    pub residual_f1: f64,
    pub residual_f2: f64,
    /// `(4 C0 / gamma^(2d))^m max(X^((1-gamma)^m), X)`; may overflow to infinity.
    pub bound: f64,
    pub ln_bound: f64,
    /// Step check: `m = 1` against its own bound, later steps against the
    /// previous bound times `4 C0 / gamma^(2d)`.
    pub amplification_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowModeReport {
    pub lhs: f64,
    pub ln_rhs: f64,
    pub satisfied: bool,
    pub alpha_opt: f64,
    pub ln_rhs_improved: f64,
    pub satisfied_improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub params: BootstrapParams,
    pub steps: Vec<BootstrapStep>,
    pub termination_m: usize,
    /// Mean of `f1`.
    pub c0: f64,
    pub low_mode_mass: f64,
    pub empirical_c0: f64,
    pub delta: f64,
    pub beta: f64,
    pub mu: f64,
    pub mu2: f64,
    pub x: f64,
    pub concentration_c: f64,
    pub lipschitz_c: f64,
    pub comparison_ratio: f64,
    pub base_ratio: f64,
    pub low_mode: LowModeReport,
}

fn ln_max_power(x: f64, power: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        (power * x.ln()).max(x.ln())
    }
}

/// Runs the cone chain for `m = 1..=termination_m`.
///
/// `C0` is measured, never assumed: it is the largest of `2C + 2C'^2 + 2`,
/// the comparison ratio times `gamma^(2d)` and the base-step ratio, with
/// `C` and `C'` the measured concentration and chain-rule constants at the
/// base cone `(mu, mu_2)`.
pub fn bootstrap(chi: &PhaseField, p: &BootstrapParams) -> Result<BootstrapReport> {
    bootstrap_with(&ConeAnalysis::new(chi), p)
}

pub fn bootstrap_with(a: &ConeAnalysis, p: &BootstrapParams) -> Result<BootstrapReport> {
    p.validate()?;
    let gamma = p.gamma;
    let two_d = 2 * p.d as i32;
    let mu = p.mu();
    let mu2 = p.mu_m(2);
    let x = a.energy_scale(mu, mu2);

    let conc = a.concentration(mu, mu2)?;
    let c1 = ConeSpec::sharp(Axis::X1, mu, mu2)?;
    let c2 = ConeSpec::sharp(Axis::X2, mu, mu2)?;
    let lip = a
        .lipschitz(true, &c1, gamma)?
        .ratio
        .max(a.lipschitz(false, &c2, gamma)?.ratio);
    let lipschitz_c = lip * gamma.powi(p.d as i32);
    let comparison_ratio = a.comparison(mu, mu2, gamma)?.ratio;

    let termination_m = p.termination_m();
    let residuals: Vec<(usize, usize, f64, f64, f64, f64)> = (1..=termination_m.max(1))
        .into_par_iter()
        .map(|m| {
            let (me, mo) = (even_index(m), odd_index(m));
            let (mu_me, mu_mo) = (p.mu_m(me), p.mu_m(mo));
            let (r1, r2) = a.residuals(mu, mu_me, mu_mo, 0.0).expect("validated cone");
            (me, mo, mu_me, mu_mo, r1, r2)
        })
        .collect();

    let gamma_2d = gamma.powi(two_d);
    let first_sum = residuals[0].4 + residuals[0].5;
    let base_scale = 4.0 / gamma_2d * x.powf(1.0 - gamma).max(x);
    let base_ratio = if first_sum == 0.0 { 0.0 } else { first_sum / base_scale };
    let c0 = (2.0 * conc.ratio + 2.0 * lipschitz_c * lipschitz_c + 2.0)
        .max(comparison_ratio * gamma_2d)
        .max(base_ratio);
    let ln_amp = (4.0 * c0).ln() - two_d as f64 * gamma.ln();

    let mut steps = Vec::with_capacity(termination_m);
    let mut prev_ln = ln_max_power(x, 1.0);
    for (i, &(m_e, m_o, mu_me, mu_mo, r1, r2)) in residuals.iter().enumerate().take(termination_m) {
        let m = i + 1;
        let ln_bound = m as f64 * ln_amp + ln_max_power(x, (1.0 - gamma).powi(m as i32));
        let total = r1 + r2;
        let limit = if m == 1 { ln_bound } else { prev_ln + ln_amp };
        let amplification_ok = total == 0.0 || total.ln() <= limit * (1.0 + 1e-12) + 1e-12;
        steps.push(BootstrapStep {
            m,
            m_e,
            m_o,
            mu_me,
            mu_mo,
            residual_f1: r1,
            residual_f2: r2,
            bound: ln_bound.exp(),
            ln_bound,
            amplification_ok,
        });
        prev_ln = ln_bound;
    }

    let low_mode = low_mode_bound(a, p, c0);
    Ok(BootstrapReport {
        params: *p,
        steps,
        termination_m,
        c0: a.chi22.mean(),
        low_mode_mass: low_mode.lhs,
        empirical_c0: c0,
        delta: a.delta,
        beta: a.beta,
        mu,
        mu2,
        x,
        concentration_c: conc.ratio,
        lipschitz_c,
        comparison_ratio,
        base_ratio,
        low_mode,
    })
}

/// `||f1 - mean||^2` against both the fixed-`alpha` and optimized-`alpha`
/// right-hand sides, compared in log space.
pub fn low_mode_bound(a: &ConeAnalysis, p: &BootstrapParams, c0: f64) -> LowModeReport {
    let lhs = a.spec22.norm_sq() - a.spec22.coeffs()[0].norm_sqr();
    let lhs = lhs.max(0.0);
    let ln_eps = p.eps.ln();
    let energy = a.delta + p.eps * a.beta;
    let ln_max = ln_max_power(energy, 0.5);
    let d = p.d as f64;
    let ln_rhs = ((4.0 * c0).ln() - 4.0 * d * p.alpha.ln()) / p.alpha - 2.0 * p.alpha * ln_eps + ln_max;
    let alpha_opt = (-ln_eps).powf(-1.0 / (2.0 + p.nu));
    let c = 4.0 * d / (std::f64::consts::E * p.nu);
    let ln_rhs_improved =
        alpha_opt.powf(-1.0 - p.nu) * ((4.0 * c0).ln() + c) - 2.0 * alpha_opt * ln_eps + ln_max;
    let holds = |ln_rhs: f64| lhs == 0.0 || lhs.ln() <= ln_rhs;
    LowModeReport {
        lhs,
        ln_rhs,
        satisfied: holds(ln_rhs),
        alpha_opt,
        ln_rhs_improved,
        satisfied_improved: holds(ln_rhs_improved),
    }
}

pub fn low_mode_bound_check(chi: &PhaseField, p: &BootstrapParams, c0: f64) -> Result<LowModeReport> {
    p.validate()?;
    if !(c0 > 0.0) {
        return Err(Error::InvalidParams(format!("C0 {c0} must be positive")));
    }
    Ok(low_mode_bound(&ConeAnalysis::new(chi), p, c0))
}
