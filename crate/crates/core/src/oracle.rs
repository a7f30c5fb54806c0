//! Slow, independent reference implementations. Direct double sums and
//! dense matrices only, no FFT, so they can cross-check the fast paths.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::energy::GradientScheme;
use crate::field::{Grid, PhaseField};
use crate::fft::freq;
use crate::square::{DiagMatrix, Phase};
use crate::sum::Compensated;

/// Normalized 2-D DFT by direct summation, `O(n^4)`.
pub fn naive_forward(values: &[f64], n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n * n) as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for k1 in 0..n {
        for k2 in 0..n {
            let mut re = Compensated::new();
            let mut im = Compensated::new();
            for j1 in 0..n {
                for j2 in 0..n {
                    // reduce the phase mod n before scaling keeps angles small
                    let t = ((k1 * j1 + k2 * j2) % n) as f64 * 2.0 * PI / n as f64;
                    let v = values[j1 * n + j2];
                    re.add(v * t.cos());
                    im.add(-v * t.sin());
                }
            }
            out[k1 * n + k2] = Complex64::new(re.value(), im.value()) * scale;
        }
    }
    out
}

/// Inverse of [`naive_forward`], returning complex samples.
pub fn naive_inverse(coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for j1 in 0..n {
        for j2 in 0..n {
            let mut re = Compensated::new();
            let mut im = Compensated::new();
            for k1 in 0..n {
                for k2 in 0..n {
                    let t = ((k1 * j1 + k2 * j2) % n) as f64 * 2.0 * PI / n as f64;
                    let c = coeffs[k1 * n + k2] * Complex64::new(t.cos(), t.sin());
                    re.add(c.re);
                    im.add(c.im);
                }
            }
            out[j1 * n + j2] = Complex64::new(re.value(), im.value());
        }
    }
    out
}

/// Dense 1-D differentiation matrix for the given scheme, assembled from
/// its Fourier symbol by direct summation. Row-major `n x n`.
pub fn diff_matrix(n: usize, scheme: GradientScheme) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        for l in 0..n {
            let mut acc = Compensated::new();
            for i in 0..n {
                let s = scheme.symbol(i, n);
                let shift = (freq(i, n) * (j as i64 - l as i64)).rem_euclid(n as i64);
                let t = shift as f64 * 2.0 * PI / n as f64;
                acc.add((s * Complex64::new(t.cos(), t.sin())).re);
            }
            d[j * n + l] = acc.value() / n as f64;
        }
    }
    d
}

struct Operator {
    n: usize,
    d: Vec<f64>,
}

impl Operator {
    /// Derivative along x1 (row index).
    fn d1(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i1 in 0..n {
            for i2 in 0..n {
                out[i1 * n + i2] = (0..n).map(|l| self.d[i1 * n + l] * v[l * n + i2]).sum();
            }
        }
    }

    fn d2(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i1 in 0..n {
            for i2 in 0..n {
                out[i1 * n + i2] = (0..n).map(|l| self.d[i2 * n + l] * v[i1 * n + l]).sum();
            }
        }
    }

    fn d1t(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i1 in 0..n {
            for i2 in 0..n {
                out[i1 * n + i2] = (0..n).map(|l| self.d[l * n + i1] * v[l * n + i2]).sum();
            }
        }
    }

    fn d2t(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i1 in 0..n {
            for i2 in 0..n {
                out[i1 * n + i2] = (0..n).map(|l| self.d[l * n + i2] * v[i1 * n + l]).sum();
            }
        }
    }

    /// `(D1^T D1 + D2^T D2) v`
    fn normal(&self, v: &[f64], out: &mut [f64]) {
        let len = v.len();
        let (mut a, mut b) = (vec![0.0; len], vec![0.0; len]);
        self.d1(v, &mut a);
        self.d1t(&a, out);
        self.d2(v, &mut a);
        self.d2t(&a, &mut b);
        out.iter_mut().zip(&b).for_each(|(o, x)| *o += x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients on the singular normal equations. The right-hand
/// side is orthogonal to the constants, so iterates stay mean-free.
fn conjugate_gradient(op: &Operator, rhs: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let len = rhs.len();
    let mut x = vec![0.0; len];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; len];
    let r0 = dot(&r, &r).sqrt();
    let mut rr = r0 * r0;
    if r0 == 0.0 {
        return (x, 0);
    }
    for it in 0..max_iter {
        op.normal(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * r0 {
            return (x, it + 1);
        }
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    (x, max_iter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectMinimum {
    pub energy: f64,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes `(1/n^2) sum |grad v + F - M(chi)|^2` over periodic `v` by
/// CG with dense differentiation matrices, then evaluates the functional
/// directly at the minimizer.
pub fn direct_minimum(chi: &PhaseField, f: &DiagMatrix, scheme: GradientScheme) -> DirectMinimum {
    let grid = chi.grid();
    let n = grid.n();
    let op = Operator {
        n,
        d: diff_matrix(n, scheme),
    };
    let len = grid.len();
    // targets for d1 v1 and d2 v2
    let g1: Vec<f64> = chi.labels().iter().map(|p| p.diag_ints().0 as f64 - f.a).collect();
    let g2: Vec<f64> = chi.labels().iter().map(|p| p.diag_ints().1 as f64 - f.b).collect();
    let mut rhs1 = vec![0.0; len];
    let mut rhs2 = vec![0.0; len];
    op.d1t(&g1, &mut rhs1);
    op.d2t(&g2, &mut rhs2);
    let (v1, it1) = conjugate_gradient(&op, &rhs1, 1e-14, 4 * len);
    let (v2, it2) = conjugate_gradient(&op, &rhs2, 1e-14, 4 * len);
    let energy = direct_energy(&op, &v1, &v2, &g1, &g2);
    DirectMinimum {
        energy,
        v1,
        v2,
        iterations: it1.max(it2),
    }
}

fn direct_energy(op: &Operator, v1: &[f64], v2: &[f64], g1: &[f64], g2: &[f64]) -> f64 {
    let len = v1.len();
    let mut buf = vec![0.0; len];
    let mut acc = Compensated::new();
    op.d1(v1, &mut buf);
    acc.extend(buf.iter().zip(g1).map(|(d, g)| (d - g).powi(2)));
    op.d2(v1, &mut buf);
    acc.extend(buf.iter().map(|d| d * d));
    op.d1(v2, &mut buf);
    acc.extend(buf.iter().map(|d| d * d));
    op.d2(v2, &mut buf);
    acc.extend(buf.iter().zip(g2).map(|(d, g)| (d - g).powi(2)));
    acc.value() / len as f64
}

/// Every phase field on an `n x n` grid, in lexicographic order of labels.
/// Only sensible for `n <= 2` (`4^(n^2)` fields).
pub fn all_fields(grid: Grid) -> impl Iterator<Item = PhaseField> {
    let len = grid.len();
    let count = 4u64.checked_pow(len as u32).expect("grid too large to enumerate");
    (0..count).map(move |code| {
        let labels = (0..len)
            .map(|i| Phase::from_index(((code >> (2 * i)) & 3) as u8 + 1).expect("index < 4"))
            .collect();
        PhaseField::new(grid, labels).expect("grid-sized labels")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_matrix_kills_constants() {
        for n in [2, 4, 8] {
            let d = diff_matrix(n, GradientScheme::Spectral);
            for j in 0..n {
                let row: f64 = d[j * n..(j + 1) * n].iter().sum();
                assert!(row.abs() < 1e-12);
            }
        }
        let d = diff_matrix(4, GradientScheme::ForwardDifference);
        assert!((d[0] + 4.0).abs() < 1e-12 && (d[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn naive_round_trip() {
        let n = 4;
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let back = naive_inverse(&naive_forward(&v, n), n);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-13 && b.im.abs() < 1e-13);
        }
    }

    #[test]
    fn enumeration_count() {
        let grid = Grid::new(2).unwrap();
        assert_eq!(all_fields(grid).count(), 256);
        assert_eq!(all_fields(grid).filter(|f| f.is_constant()).count(), 4);
    }
}
