//! Unnormalized multi-dimensional FFT over row-major cubic arrays.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Cached 1D plan of length `n`; `inverse` selects the `e^{+i}` kernel.
pub fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                let dir = if inverse {
                    FftDirection::Inverse
                } else {
                    FftDirection::Forward
                };
                planner.plan_fft(n, dir)
            })
            .clone()
    })
}

/// In-place transform along every axis of a `points^dim` array.
///
/// Forward computes `sum_n a_n e^{-2 pi i n.k/M}`, inverse uses `e^{+...}`;
/// neither normalizes.
pub fn fft_nd(data: &mut [Complex64], dim: usize, points: usize, inverse: bool) {
    debug_assert_eq!(data.len(), points.pow(dim as u32));
    let fft = plan(points, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    fft.process_with_scratch(data, &mut scratch);
    if dim == 2 {
        // contiguous rows beat strided columns by a wide margin
        transpose_square(data, points);
        fft.process_with_scratch(data, &mut scratch);
        transpose_square(data, points);
        return;
    }
    let mut line = vec![Complex64::default(); points];
    for axis in (0..dim.saturating_sub(1)).rev() {
        let stride = points.pow((dim - 1 - axis) as u32);
        let block = stride * points;
        for chunk in data.chunks_mut(block) {
            for offset in 0..stride {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = chunk[offset + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    chunk[offset + i * stride] = *v;
                }
            }
        }
    }
}

fn transpose_square(a: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (ib..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                let j0 = if ib == jb { i + 1 } else { jb };
                for j in j0..(jb + B).min(n) {
                    a.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
