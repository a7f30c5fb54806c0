//! Surrogate energy of the order-`m`, scale-`r` laminate and the resulting
//! scaling law in `epsilon`.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::laminate::{build, DyadicScale, LaminateSpec};
use crate::square::DiagMatrix;

pub const M_CAP: usize = 64;
pub const P_MAX: u32 = 40;

fn check(m: usize, r: f64, eps: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("order must be at least 1".into()));
    }
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::Domain(format!("scale {r} not in (0, 1/2)")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("epsilon {eps} must be positive")));
    }
    Ok(())
}

/// `2^-m + r + eps 2^-m r^-m`.
pub fn surrogate(m: usize, r: f64, eps: f64) -> Result<f64> {
    check(m, r, eps)?;
    Ok(surrogate_unchecked(m, r, eps))
}

fn surrogate_unchecked(m: usize, r: f64, eps: f64) -> f64 {
    let plateau = 0.5f64.powi(m as i32);
    plateau + r + eps * plateau * r.powi(-(m as i32))
}

/// `2^-m + sum_{j=2}^m 2^-j r + r + eps 2^-m r^-m`.
pub fn surrogate_full(m: usize, r: f64, eps: f64) -> Result<f64> {
    check(m, r, eps)?;
    let middle: f64 = (2..=m as i32).map(|j| 0.5f64.powi(j) * r).sum();
    Ok(surrogate_unchecked(m, r, eps) + middle)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub m: usize,
    pub p: u32,
    pub r: f64,
    pub energy: f64,
}

/// Exhaustive minimum over `m <= M_CAP`, `r = 2^-p`, `2 <= p <= P_MAX`.
/// Ties keep the smallest `m`, then the largest `r`.
pub fn optimize_params(eps: f64) -> Result<Optimum> {
    optimize_within(eps, M_CAP, P_MAX)
}

pub fn optimize_within(eps: f64, m_cap: usize, p_max: u32) -> Result<Optimum> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("epsilon {eps} not in (0, 1/2)")));
    }
    let mut best: Option<Optimum> = None;
    for m in 1..=m_cap {
        for p in 2..=p_max {
            let r = 0.5f64.powi(p as i32);
            let energy = surrogate_unchecked(m, r, eps);
            if best.map_or(true, |b| energy < b.energy) {
                best = Some(Optimum { m, p, r, energy });
            }
        }
    }
    best.ok_or_else(|| Error::Domain("empty search range".into()))
}

/// Best `r` for fixed `m` without the dyadic restriction,
/// `r = (m eps 2^-m)^(1/(m+1))` (clamped below 1/2).
pub fn continuous_scale(m: usize, eps: f64) -> f64 {
    let r = (m as f64 * eps * 0.5f64.powi(m as i32)).powf(1.0 / (m as f64 + 1.0));
    r.min(0.5 - f64::EPSILON)
}

/// Minimum over `m` of the surrogate at the continuous optimal scale.
pub fn optimize_continuous(eps: f64) -> Result<(usize, f64, f64)> {
    check(1, 0.25, eps)?;
    let mut best = (0, 0.0, f64::INFINITY);
    for m in 1..=M_CAP {
        let r = continuous_scale(m, eps);
        let e = surrogate_unchecked(m, r, eps);
        if e < best.2 {
            best = (m, r, e);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub nu: f64,
}

/// `(exp(-c |ln eps|^(1/2 + nu)), exp(-C |ln eps|^(1/2)))`.
pub fn rate_functions(eps: f64, p: &RateParams) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon {eps} not in (0, 1)")));
    }
    let l = -eps.ln();
    Ok(((-p.c * l.powf(0.5 + p.nu)).exp(), (-p.big_c * l.sqrt()).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub m_opt: usize,
    pub r_opt: f64,
    pub e_surrogate: f64,
    pub e_grid: Option<f64>,
    pub n_grid: Option<usize>,
}

/// Optimizes every `eps`; where the optimal laminate fits a grid of side
/// at most `n_cap`, builds it and records its measured total energy.
/// Output order follows input order.
pub fn sweep(eps_list: &[f64], n_cap: Option<usize>) -> Result<Vec<SweepRecord>> {
    if let Some(bad) = eps_list.iter().find(|e| !(**e > 0.0 && **e < 0.5)) {
        return Err(Error::Domain(format!("epsilon {bad} not in (0, 1/2)")));
    }
    let cache: Mutex<HashMap<(usize, u32), Option<(f64, f64)>>> = Mutex::new(HashMap::new());
    let measure = |m: usize, p: u32, n: usize| -> Option<(f64, f64)> {
        if let Some(v) = cache.lock().expect("cache lock").get(&(m, p)) {
            return *v;
        }
        let value = LaminateSpec::new(m, 0.5f64.powi(p as i32), DiagMatrix::ZERO, n)
            .and_then(|spec| build(&spec))
            .and_then(|(field, _)| total_energy(&field, &DiagMatrix::ZERO, 1.0))
            .ok()
            .map(|e| (e.elastic, e.surface));
        cache.lock().expect("cache lock").insert((m, p), value);
        value
    };
    let optima: Vec<Optimum> = eps_list.iter().map(|&e| optimize_params(e)).collect::<Result<_>>()?;
    let records = eps_list
        .par_iter()
        .zip(optima.par_iter())
        .map(|(&eps, opt)| {
            let scale = DyadicScale::from_exponent(opt.p).expect("p >= 2");
            let need = LaminateSpec::min_grid(opt.m, scale);
            let grid = n_cap
                .filter(|&cap| need <= cap as u64)
                .and_then(|_| measure(opt.m, opt.p, need as usize).map(|v| (v, need as usize)));
            SweepRecord {
                eps,
                m_opt: opt.m,
                r_opt: opt.r,
                e_surrogate: opt.energy,
                e_grid: grid.map(|((el, surf), _)| el + eps * surf),
                n_grid: grid.map(|(_, n)| n),
            }
        })
        .collect();
    Ok(records)
}

/// `2^-k` for `k = k_min..=k_max`, descending in value.
pub fn dyadic_eps_grid(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 0.5f64.powi(k as i32)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub power_law_slope: f64,
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    (slope, intercept, r2)
}

/// Fits `ln E` against `|ln eps|^(1/2)` and, for contrast, against `ln eps`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 8 {
        return Err(Error::InsufficientData {
            need: 8,
            got: points.len(),
        });
    }
    let ln_e: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let root: Vec<f64> = points.iter().map(|p| (-p.0.ln()).sqrt()).collect();
    let ln_eps: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&root, &ln_e);
    let (power_law_slope, _, _) = linear_fit(&ln_eps, &ln_e);
    Ok(Fit {
        slope,
        intercept,
        r2,
        power_law_slope,
    })
}

pub fn fit_scaling(records: &[SweepRecord]) -> Result<Fit> {
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps, r.e_surrogate)).collect();
    fit_points(&pts)
}

/// Power-law slope `d ln E / d ln eps` over records with `eps` in `[lo, hi]`.
pub fn windowed_power_slope(records: &[SweepRecord], lo: f64, hi: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.eps >= lo && r.eps <= hi)
        .map(|r| (r.eps.ln(), r.e_surrogate.ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::InsufficientData { need: 2, got: xs.len() });
    }
    Ok(linear_fit(&xs, &ys).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub m: usize,
    pub eps: f64,
    pub r: f64,
    pub energy: f64,
}

/// For each fixed `m`, the dyadic-`r` minimum of the surrogate.
pub fn fixed_order_envelope(m_list: &[usize], eps_list: &[f64]) -> Result<Vec<EnvelopePoint>> {
    let mut out = Vec::with_capacity(m_list.len() * eps_list.len());
    for &m in m_list {
        for &eps in eps_list {
            let opt = optimize_order(m, eps)?;
            out.push(EnvelopePoint { m, eps, r: opt.r, energy: opt.energy });
        }
    }
    Ok(out)
}

fn optimize_order(m: usize, eps: f64) -> Result<Optimum> {
    check(m, 0.25, eps)?;
    let mut best = Optimum { m, p: 2, r: 0.25, energy: surrogate_unchecked(m, 0.25, eps) };
    for p in 3..=P_MAX {
        let r = 0.5f64.powi(p as i32);
        let energy = surrogate_unchecked(m, r, eps);
        if energy < best.energy {
            best = Optimum { m, p, r, energy };
        }
    }
    Ok(best)
}
