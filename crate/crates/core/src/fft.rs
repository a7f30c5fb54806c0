//! Two-dimensional complex FFT on square power-of-two grids.
//!
//! Data is row-major, `data[i1 * n + i2]`. Rows are transformed in
//! parallel, then the square is transposed in place, and the pass is
//! repeated. No normalization is applied here.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

const BLOCK: usize = 32;

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let fwd = matches!(direction, FftDirection::Forward);
    PLANNER.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((n, fwd))
            .or_insert_with(|| planner.plan_fft(n, direction))
            .clone()
    })
}

/// Frequency represented by storage index `i`: `i` below `n/2`, else `i - n`.
#[inline]
pub fn freq(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Storage index of integer frequency `k` (taken modulo `n`).
#[inline]
pub fn index_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// In-place transpose of an `n x n` row-major matrix.
pub fn transpose_square<T: Copy + Send>(data: &mut [T], n: usize) {
    assert_eq!(data.len(), n * n);
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            let i_end = (bi + BLOCK).min(n);
            let j_end = (bj + BLOCK).min(n);
            for i in bi..i_end {
                let j_start = if bi == bj { i + 1 } else { bj };
                for j in j_start..j_end {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

fn rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// Unnormalized 2D transform in place.
pub fn fft2_inplace(data: &mut [Complex64], n: usize, direction: FftDirection) {
    assert_eq!(data.len(), n * n, "buffer is not n x n");
    let fft = plan(n, direction);
    rows(data, n, &fft);
    transpose_square(data, n);
    rows(data, n, &fft);
    transpose_square(data, n);
}

/// `(1/n^2) sum_x f(x) exp(-2 pi i k.x)` in place.
pub fn forward_inplace(data: &mut [Complex64], n: usize) {
    fft2_inplace(data, n, FftDirection::Forward);
    let scale = 1.0 / (n * n) as f64;
    data.par_iter_mut().for_each(|c| *c *= scale);
}

/// `sum_k c(k) exp(2 pi i k.x)` in place.
pub fn inverse_inplace(data: &mut [Complex64], n: usize) {
    fft2_inplace(data, n, FftDirection::Inverse);
}
