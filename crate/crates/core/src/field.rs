//! Periodic grid fields on the unit torus.
//!
//! Storage is row-major with the `x1` index outermost: the value at
//! `(i1 / n, i2 / n)` lives at `i1 * n + i2`. Spectral coefficients use the
//! same layout with storage index `i` standing for frequency [`freq`]`(i, n)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{self, freq, index_of};
use crate::square::{chi_diag, DiagMatrix, Phase};
use crate::sum::{sum, Compensated};

/// A square periodic grid of side `n` (a power of two, at least 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n >= 2 && n.is_power_of_two() {
            Ok(Self { n })
        } else {
            Err(Error::InvalidGrid(n))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n + i2
    }

    /// Integer frequency pair of storage index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (freq(idx / self.n, self.n), freq(idx % self.n, self.n))
    }

    #[inline]
    pub fn index_of_freq(&self, k1: i64, k2: i64) -> usize {
        index_of(k1, self.n) * self.n + index_of(k2, self.n)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }
}

/// Phase labels, one per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseField {
    grid: Grid,
    labels: Vec<Phase>,
}

impl PhaseField {
    pub fn new(grid: Grid, labels: Vec<Phase>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::Parse(format!(
                "expected {} labels, got {}",
                grid.len(),
                labels.len()
            )));
        }
        Ok(Self { grid, labels })
    }

    pub fn constant(grid: Grid, p: Phase) -> Self {
        Self {
            grid,
            labels: vec![p; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> Phase) -> Self {
        let n = grid.n();
        let labels = (0..n * n).map(|idx| f(idx / n, idx % n)).collect();
        Self { grid, labels }
    }

    /// Independent uniform labels.
    pub fn random<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Self {
        let labels = (0..grid.len())
            .map(|_| Phase::ALL[rng.gen_range(0..4)])
            .collect();
        Self { grid, labels }
    }

    /// Two-phase stripes varying in `x1` (`axis_x1 = true`) or in `x2`,
    /// `periods` full periods across the torus, first half `a`, second half `b`.
    pub fn stripes(grid: Grid, a: Phase, b: Phase, periods: usize, axis_x1: bool) -> Result<Self> {
        let n = grid.n();
        if periods == 0 || n % (2 * periods) != 0 {
            return Err(Error::Resolution(format!(
                "{periods} stripe periods do not fit a grid of side {n}"
            )));
        }
        let width = n / (2 * periods);
        Ok(Self::from_fn(grid, |i1, i2| {
            let i = if axis_x1 { i1 } else { i2 };
            if (i / width) % 2 == 0 {
                a
            } else {
                b
            }
        }))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn labels(&self) -> &[Phase] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> Phase {
        self.labels[self.grid.index(i1, i2)]
    }

    pub fn is_constant(&self) -> bool {
        self.labels.iter().all(|&p| p == self.labels[0])
    }

    /// Volume fraction of each phase.
    pub fn fractions(&self) -> [f64; 4] {
        let mut counts = [0usize; 4];
        for p in &self.labels {
            counts[p.index() as usize - 1] += 1;
        }
        let total = self.grid.len() as f64;
        counts.map(|c| c as f64 / total)
    }

    /// `(chi11, chi22)` as scalar fields.
    pub fn to_diag_fields(&self) -> (ScalarField, ScalarField) {
        let (c11, c22): (Vec<f64>, Vec<f64>) = self
            .labels
            .iter()
            .map(|p| {
                let (a, b) = p.diag_ints();
                (a as f64, b as f64)
            })
            .unzip();
        (
            ScalarField {
                grid: self.grid,
                values: c11,
            },
            ScalarField {
                grid: self.grid,
                values: c22,
            },
        )
    }

    /// Mean of the well field, `chi_diag` of the label fractions.
    pub fn mean_matrix(&self) -> DiagMatrix {
        let (a, b) = chi_diag(self.fractions());
        DiagMatrix::new(a, b)
    }

    /// Cyclic shift: the result at `(i1, i2)` is the input at `(i1 - s1, i2 - s2)`.
    pub fn shifted(&self, s1: usize, s2: usize) -> Self {
        let n = self.grid.n();
        Self::from_fn(self.grid, |i1, i2| {
            self.get((i1 + n - s1 % n) % n, (i2 + n - s2 % n) % n)
        })
    }

    /// Text dump: `n=<int>` then `n` lines of `n` labels; line `i1` holds `x1 = i1/n`.
    pub fn to_text(&self) -> String {
        let n = self.grid.n();
        let mut out = String::with_capacity(2 * n * n + 16);
        let _ = writeln!(out, "n={n}");
        for row in self.labels.chunks(n) {
            for (j, p) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push(char::from(b'0' + p.index()));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty phase field dump".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
        let grid = Grid::new(n)?;
        let mut labels = Vec::with_capacity(grid.len());
        for (row, line) in lines.enumerate() {
            let before = labels.len();
            for tok in line.split_whitespace() {
                let p = tok
                    .parse::<u8>()
                    .ok()
                    .and_then(Phase::from_index)
                    .ok_or_else(|| Error::Parse(format!("bad label {tok:?} on row {row}")))?;
                labels.push(p);
            }
            if labels.len() - before != n {
                return Err(Error::Parse(format!(
                    "row {row} has {} labels, expected {n}",
                    labels.len() - before
                )));
            }
        }
        Self::new(grid, labels)
    }
}

/// Real values on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parse(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x1, x2)` at the grid nodes.
    pub fn sample(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let h = grid.h();
        let values = (0..n * n)
            .map(|idx| f((idx / n) as f64 * h, (idx % n) as f64 * h))
            .collect();
        Self { grid, values }
    }

    pub fn random<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Self {
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn mean(&self) -> f64 {
        row_sum(&self.values, self.grid.n(), |v| v) / self.grid.len() as f64
    }

    /// `(1/n^2) sum |f|^2`, the squared L2 norm on the unit torus.
    pub fn norm_sq(&self) -> f64 {
        row_sum(&self.values, self.grid.n(), |v| v * v) / self.grid.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn shifted(&self, s1: usize, s2: usize) -> Self {
        let n = self.grid.n();
        let values = (0..n * n)
            .map(|idx| {
                let (i1, i2) = (idx / n, idx % n);
                self.get((i1 + n - s1 % n) % n, (i2 + n - s2 % n) % n)
            })
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn forward(&self) -> SpectralField {
        forward(self)
    }
}

/// Row-wise compensated reduction, rows folded in index order.
pub(crate) fn row_sum<T: Sync>(data: &[T], n: usize, f: impl Fn(T) -> f64 + Sync) -> f64
where
    T: Copy,
{
    let partial: Vec<f64> = data
        .par_chunks(n)
        .map(|row| row.iter().map(|&v| f(v)).collect::<Compensated>().value())
        .collect();
    sum(partial)
}

/// Fourier coefficients `f^(k)`, `k` in `{-n/2..n/2-1}^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Parse(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn at(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.index_of_freq(k1, k2)]
    }

    /// `sum_k |f^(k)|^2`.
    pub fn norm_sq(&self) -> f64 {
        row_sum(&self.coeffs, self.grid.n(), |c| c.norm_sqr())
    }

    /// Largest violation of `f^(-k) = conj f^(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|idx| {
                let (k1, k2) = self.grid.wavevector(idx);
                (self.coeffs[idx] - self.at(-k1, -k2).conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise multiplication by a real multiplier `w(k1, k2)`.
    pub fn apply(&self, w: impl Fn(i64, i64) -> f64 + Sync) -> Self {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(idx, &c)| {
                let (k1, k2) = grid.wavevector(idx);
                c * w(k1, k2)
            })
            .collect();
        Self { grid, coeffs }
    }

    pub fn inverse(&self) -> ScalarField {
        inverse(self)
    }

    /// Inverse transform keeping both parts.
    pub fn inverse_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        fft::inverse_inplace(&mut data, self.grid.n());
        data
    }
}

pub fn forward(f: &ScalarField) -> SpectralField {
    let n = f.grid.n();
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward_inplace(&mut data, n);
    SpectralField {
        grid: f.grid,
        coeffs: data,
    }
}

/// Real part of the inverse transform.
pub fn inverse(s: &SpectralField) -> ScalarField {
    ScalarField {
        grid: s.grid,
        values: s.inverse_complex().into_iter().map(|c| c.re).collect(),
    }
}

pub fn mean(f: &ScalarField) -> f64 {
    f.mean()
}

/// Displacement `u(x) = F x + v(x)` with periodic `v = (v1, v2)` stored at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub v1: ScalarField,
    pub v2: ScalarField,
    pub mean_gradient: DiagMatrix,
}

impl DisplacementField {
    pub fn new(v1: ScalarField, v2: ScalarField, mean_gradient: DiagMatrix) -> Result<Self> {
        v1.grid().ensure_same(&v2.grid())?;
        Ok(Self {
            v1,
            v2,
            mean_gradient,
        })
    }

    pub fn zero(grid: Grid, mean_gradient: DiagMatrix) -> Self {
        Self {
            v1: ScalarField::zeros(grid),
            v2: ScalarField::zeros(grid),
            mean_gradient,
        }
    }

    pub fn grid(&self) -> Grid {
        self.v1.grid()
    }

    /// Full displacement `u1` at node `(i1, i2)`, including the affine part.
    pub fn u1(&self, i1: usize, i2: usize) -> f64 {
        self.v1.get(i1, i2) + self.mean_gradient.a * i1 as f64 * self.grid().h()
    }

    pub fn u2(&self, i1: usize, i2: usize) -> f64 {
        self.v2.get(i1, i2) + self.mean_gradient.b * i2 as f64 * self.grid().h()
    }
}
