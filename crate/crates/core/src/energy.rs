//! Elastic, surface and total energies of a phase field.
//!
//! The minimized elastic energy is evaluated through its Fourier multiplier:
//!
//! ```text
//! E_el(chi, F) = sum_{k != 0} k2^2/|k|^2 |c11^(k)|^2 + k1^2/|k|^2 |c22^(k)|^2 + |chi^(0) - F|^2
//! ```
//!
//! Both diagonal entries are transformed at once by packing
//! `z = c11 + i c22` into a single complex buffer.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, freq};
use crate::field::{DisplacementField, Grid, PhaseField, ScalarField, SpectralField};
use crate::square::DiagMatrix;
use crate::sum::{sum, Compensated};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub surface: f64,
    pub epsilon: f64,
    pub total: f64,
    pub h1m_d2chi11: f64,
    pub h1m_d1chi22: f64,
    pub mean_dev: f64,
}

impl EnergyBreakdown {
    /// `delta` of the lower-bound argument: the two directional H^-1 terms.
    pub fn delta(&self) -> f64 {
        self.h1m_d2chi11 + self.h1m_d1chi22
    }
}

/// Directional negative-Sobolev seminorms `(||d2 c11||^2, ||d1 c22||^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorms {
    pub d2chi11: f64,
    pub d1chi22: f64,
}

/// Transform of `c11 + i c22`, the two real spectra interleaved.
fn packed_spectrum(chi: &PhaseField) -> Vec<Complex64> {
    let n = chi.grid().n();
    let mut z: Vec<Complex64> = chi
        .labels()
        .par_iter()
        .map(|p| {
            let (a, b) = p.diag_ints();
            Complex64::new(a as f64, b as f64)
        })
        .collect();
    fft::forward_inplace(&mut z, n);
    z
}

#[inline]
fn partner(idx: usize, n: usize) -> usize {
    let (i1, i2) = (idx / n, idx % n);
    ((n - i1) % n) * n + (n - i2) % n
}

/// Splits `Z(k)` into the transforms of the real and imaginary parts.
#[inline]
fn split(z: Complex64, zm: Complex64) -> (Complex64, Complex64) {
    let zc = zm.conj();
    let a = (z + zc) * 0.5;
    let b = (z - zc) * Complex64::new(0.0, -0.5);
    (a, b)
}

pub fn h_minus1_seminorms(chi: &PhaseField) -> Seminorms {
    let n = chi.grid().n();
    let z = packed_spectrum(chi);
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let k1 = freq(i1, n) as f64;
            let mut s11 = Compensated::new();
            let mut s22 = Compensated::new();
            for i2 in 0..n {
                if i1 == 0 && i2 == 0 {
                    continue;
                }
                let k2 = freq(i2, n) as f64;
                let idx = i1 * n + i2;
                let (a, b) = split(z[idx], z[partner(idx, n)]);
                let k_sq = k1 * k1 + k2 * k2;
                s11.add(k2 * k2 / k_sq * a.norm_sqr());
                s22.add(k1 * k1 / k_sq * b.norm_sqr());
            }
            (s11.value(), s22.value())
        })
        .collect();
    Seminorms {
        d2chi11: sum(rows.iter().map(|r| r.0)),
        d1chi22: sum(rows.iter().map(|r| r.1)),
    }
}

/// `|chi^(0) - F|^2` with the mean taken exactly from label fractions.
pub fn mean_deviation(chi: &PhaseField, f: &DiagMatrix) -> f64 {
    chi.mean_matrix().dist_sq(f)
}

/// Minimal elastic energy over periodic displacements with mean gradient `f`.
pub fn elastic_energy(chi: &PhaseField, f: &DiagMatrix) -> f64 {
    let s = h_minus1_seminorms(chi);
    s.d2chi11 + s.d1chi22 + mean_deviation(chi, f)
}

/// Number of periodic nearest-neighbour pairs carrying different labels.
pub fn interface_edges(chi: &PhaseField) -> usize {
    let n = chi.grid().n();
    let labels = chi.labels();
    (0..n)
        .into_par_iter()
        .map(|i1| {
            let up = (i1 + 1) % n;
            (0..n)
                .map(|i2| {
                    let here = labels[i1 * n + i2];
                    usize::from(here != labels[up * n + i2])
                        + usize::from(here != labels[i1 * n + (i2 + 1) % n])
                })
                .sum::<usize>()
        })
        .sum()
}

/// Sum over the four indicators of their anisotropic total variation.
///
/// A label change across a cell edge flips exactly two indicators, so each
/// differing neighbour pair contributes `2h`.
pub fn surface_energy(chi: &PhaseField) -> f64 {
    2.0 * interface_edges(chi) as f64 * chi.grid().h()
}

pub fn total_energy(chi: &PhaseField, f: &DiagMatrix, eps: f64) -> Result<EnergyBreakdown> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    let s = h_minus1_seminorms(chi);
    let mean_dev = mean_deviation(chi, f);
    let elastic = s.d2chi11 + s.d1chi22 + mean_dev;
    let surface = surface_energy(chi);
    Ok(EnergyBreakdown {
        elastic,
        surface,
        epsilon: eps,
        total: elastic + eps * surface,
        h1m_d2chi11: s.d2chi11,
        h1m_d1chi22: s.d1chi22,
        mean_dev,
    })
}

/// Discrete gradient used by [`elastic_energy_direct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientScheme {
    /// Fourier derivative; at the Nyquist index the symbol is the real `pi n`.
    #[default]
    Spectral,
    /// One-sided difference `(v(x + h e_j) - v(x)) / h`.
    ForwardDifference,
}

impl GradientScheme {
    /// Symbol of the derivative along one axis at storage index `i`.
    pub fn symbol(self, i: usize, n: usize) -> Complex64 {
        match self {
            GradientScheme::Spectral => {
                if 2 * i == n {
                    Complex64::new(PI * n as f64, 0.0)
                } else {
                    Complex64::new(0.0, 2.0 * PI * freq(i, n) as f64)
                }
            }
            GradientScheme::ForwardDifference => {
                let theta = 2.0 * PI * i as f64 / n as f64;
                (Complex64::new(theta.cos(), theta.sin()) - 1.0) * n as f64
            }
        }
    }
}

/// Optimal periodic corrector for the spectral derivative.
pub fn minimize_displacement(chi: &PhaseField, f: &DiagMatrix) -> DisplacementField {
    minimize_displacement_with(chi, f, GradientScheme::Spectral)
}

/// Optimal corrector `v^_j = conj(s_j) c_jj^ / |s|^2` for the given scheme.
pub fn minimize_displacement_with(
    chi: &PhaseField,
    f: &DiagMatrix,
    scheme: GradientScheme,
) -> DisplacementField {
    let grid = chi.grid();
    let n = grid.n();
    let z = packed_spectrum(chi);
    let mut v1 = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut v2 = vec![Complex64::new(0.0, 0.0); grid.len()];
    v1.par_chunks_mut(n)
        .zip(v2.par_chunks_mut(n))
        .enumerate()
        .for_each(|(i1, (r1, r2))| {
            let s1 = scheme.symbol(i1, n);
            for i2 in 0..n {
                let idx = i1 * n + i2;
                let s2 = scheme.symbol(i2, n);
                let denom = s1.norm_sqr() + s2.norm_sqr();
                if denom == 0.0 {
                    continue;
                }
                let (a, b) = split(z[idx], z[partner(idx, n)]);
                r1[i2] = s1.conj() * a / denom;
                r2[i2] = s2.conj() * b / denom;
            }
        });
    let to_real = |mut data: Vec<Complex64>| {
        fft::inverse_inplace(&mut data, n);
        ScalarField::new(grid, data.into_iter().map(|c| c.re).collect())
            .expect("grid-sized buffer")
    };
    DisplacementField {
        v1: to_real(v1),
        v2: to_real(v2),
        mean_gradient: *f,
    }
}

/// `(d1 v, d2 v)` of a periodic field under `scheme`.
pub fn gradient(v: &ScalarField, scheme: GradientScheme) -> (ScalarField, ScalarField) {
    let grid = v.grid();
    let n = grid.n();
    match scheme {
        GradientScheme::Spectral => {
            let spec = v.forward();
            let deriv = |axis1: bool| {
                let coeffs = spec
                    .coeffs()
                    .par_iter()
                    .enumerate()
                    .map(|(idx, &c)| {
                        let i = if axis1 { idx / n } else { idx % n };
                        c * scheme.symbol(i, n)
                    })
                    .collect();
                SpectralField::new(grid, coeffs)
                    .expect("grid-sized buffer")
                    .inverse()
            };
            (deriv(true), deriv(false))
        }
        GradientScheme::ForwardDifference => {
            let nf = n as f64;
            let mut d1 = ScalarField::zeros(grid);
            let mut d2 = ScalarField::zeros(grid);
            for i1 in 0..n {
                for i2 in 0..n {
                    let here = v.get(i1, i2);
                    d1.values_mut()[i1 * n + i2] = (v.get((i1 + 1) % n, i2) - here) * nf;
                    d2.values_mut()[i1 * n + i2] = (v.get(i1, (i2 + 1) % n) - here) * nf;
                }
            }
            (d1, d2)
        }
    }
}

/// `(1/n^2) sum_x |grad u(x) - chi(x)|^2` with `grad u = F + grad v`.
pub fn elastic_energy_direct(u: &DisplacementField, chi: &PhaseField) -> Result<f64> {
    elastic_energy_direct_with(u, chi, GradientScheme::Spectral)
}

pub fn elastic_energy_direct_with(
    u: &DisplacementField,
    chi: &PhaseField,
    scheme: GradientScheme,
) -> Result<f64> {
    let grid = chi.grid();
    grid.ensure_same(&u.grid())?;
    let n = grid.n();
    let (d11, d12) = gradient(&u.v1, scheme);
    let (d21, d22) = gradient(&u.v2, scheme);
    let f = u.mean_gradient;
    let labels = chi.labels();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let mut acc = Compensated::new();
            for i2 in 0..n {
                let idx = i1 * n + i2;
                let (c11, c22) = labels[idx].diag_ints();
                let e11 = d11.values()[idx] + f.a - c11 as f64;
                let e22 = d22.values()[idx] + f.b - c22 as f64;
                let e12 = d12.values()[idx];
                let e21 = d21.values()[idx];
                acc.add(e11 * e11);
                acc.add(e12 * e12);
                acc.add(e21 * e21);
                acc.add(e22 * e22);
            }
            acc.value()
        })
        .collect();
    Ok(sum(rows) / grid.len() as f64)
}

/// Spectra of `c11` and `c22` from one packed transform.
pub fn diag_spectra(chi: &PhaseField) -> (SpectralField, SpectralField) {
    let grid: Grid = chi.grid();
    let n = grid.n();
    let z = packed_spectrum(chi);
    let (a, b): (Vec<Complex64>, Vec<Complex64>) = (0..grid.len())
        .into_par_iter()
        .map(|idx| split(z[idx], z[partner(idx, n)]))
        .unzip();
    (
        SpectralField::new(grid, a).expect("grid-sized buffer"),
        SpectralField::new(grid, b).expect("grid-sized buffer"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::square::Phase;

    fn stripes(n: usize, axis_x1: bool) -> PhaseField {
        PhaseField::stripes(Grid::new(n).unwrap(), Phase::A1, Phase::A3, 1, axis_x1).unwrap()
    }

    #[test]
    fn constant_fields() {
        let g = Grid::new(8).unwrap();
        let chi = PhaseField::constant(g, Phase::A1);
        assert_eq!(elastic_energy(&chi, &Phase::A1.matrix()), 0.0);
        assert!((elastic_energy(&chi, &DiagMatrix::ZERO) - 10.0).abs() < 1e-12);
        assert_eq!(surface_energy(&chi), 0.0);
        let e = total_energy(&chi, &Phase::A1.matrix(), 0.1).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn half_stripes() {
        let x1 = stripes(32, true);
        let x2 = stripes(32, false);
        assert!((elastic_energy(&x1, &DiagMatrix::ZERO) - 9.0).abs() < 1e-10);
        assert!((elastic_energy(&x2, &DiagMatrix::ZERO) - 1.0).abs() < 1e-10);
        let s = h_minus1_seminorms(&x1);
        assert!(s.d2chi11.abs() < 1e-12 && (s.d1chi22 - 9.0).abs() < 1e-10);
        let s = h_minus1_seminorms(&x2);
        assert!((s.d2chi11 - 1.0).abs() < 1e-10 && s.d1chi22.abs() < 1e-12);
        assert_eq!(surface_energy(&x1), 4.0);
        let e = total_energy(&x1, &DiagMatrix::ZERO, 1.0).unwrap();
        assert!((e.total - 13.0).abs() < 1e-10);
        let e = total_energy(&x1, &DiagMatrix::ZERO, 0.01).unwrap();
        assert!((e.total - 9.04).abs() < 1e-10);
        assert!(total_energy(&x1, &DiagMatrix::ZERO, 0.0).is_err());
    }

    #[test]
    fn quarter_period_stripes_surface() {
        let g = Grid::new(64).unwrap();
        let chi = PhaseField::stripes(g, Phase::A1, Phase::A3, 4, true).unwrap();
        assert_eq!(surface_energy(&chi), 16.0);
    }

    #[test]
    fn interface_count_single_cell() {
        let g = Grid::new(4).unwrap();
        let chi = PhaseField::from_fn(g, |i1, i2| if (i1, i2) == (1, 2) { Phase::A2 } else { Phase::A1 });
        assert_eq!(interface_edges(&chi), 4);
        assert_eq!(surface_energy(&chi), 2.0);
    }

    #[test]
    fn stripe_corrector_is_antiderivative() {
        let chi = stripes(16, true);
        let u = minimize_displacement(&chi, &DiagMatrix::ZERO);
        assert!(u.v2.max_abs() < 1e-12);
        let direct = elastic_energy_direct(&u, &chi).unwrap();
        assert!((direct - elastic_energy(&chi, &DiagMatrix::ZERO)).abs() < 1e-10);
        let g = Grid::new(16).unwrap();
        let u0 = minimize_displacement(&PhaseField::constant(g, Phase::A2), &DiagMatrix::ZERO);
        assert!(u0.v1.max_abs() == 0.0 && u0.v2.max_abs() == 0.0);
        let zero = DisplacementField::zero(g, DiagMatrix::ZERO);
        let d = elastic_energy_direct(&zero, &PhaseField::constant(g, Phase::A1)).unwrap();
        assert!((d - 10.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_reported() {
        let a = PhaseField::constant(Grid::new(4).unwrap(), Phase::A1);
        let u = DisplacementField::zero(Grid::new(8).unwrap(), DiagMatrix::ZERO);
        assert_eq!(
            elastic_energy_direct(&u, &a),
            Err(Error::GridMismatch { left: 4, right: 8 })
        );
    }
}
