//! Thin multi-dimensional wrapper around `rustfft` for cube-shaped complex
//! arrays (side `n`, `dims` axes, x-fastest layout).
//!
//! Both directions are unnormalized, matching `rustfft`; callers pick the
//! normalization that suits their transform convention.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

pub use rustfft::num_complex::Complex;

pub type C64 = Complex<f64>;

#[derive(Clone)]
pub struct NdFft {
    n: usize,
    dims: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Reusable per-thread work buffers for [`NdFft`].
pub struct FftScratch {
    inner: Vec<C64>,
    columns: Vec<C64>,
}

impl NdFft {
    pub fn new(dims: usize, n: usize) -> Self {
        assert!(dims >= 1 && dims <= 3);
        assert!(n >= 2);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Self { n, dims, fwd, inv }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Total element count `n^dims`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn make_scratch(&self) -> FftScratch {
        let inner = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        FftScratch {
            inner: vec![C64::new(0.0, 0.0); inner],
            columns: vec![C64::new(0.0, 0.0); 32 * self.n],
        }
    }

    /// In-place forward transform (negative exponent), unnormalized.
    pub fn forward(&self, data: &mut [C64], scratch: &mut FftScratch) {
        self.transform(data, scratch, false);
    }

    /// In-place inverse transform (positive exponent), unnormalized.
    pub fn inverse(&self, data: &mut [C64], scratch: &mut FftScratch) {
        self.transform(data, scratch, true);
    }

    /// Inverse transform whose final axis pass streams each output element to
    /// `sink(index, value)` instead of writing it back, saving one pass over
    /// the cube. `data` is left mid-transform and must be refilled before
    /// reuse. Every index is visited exactly once.
    pub fn inverse_consume(
        &self,
        data: &mut [C64],
        scratch: &mut FftScratch,
        mut sink: impl FnMut(usize, C64),
    ) {
        let plan = &self.inv;
        if self.dims == 1 {
            plan.process_with_scratch(data, &mut scratch.inner);
            for (i, z) in data.iter().enumerate() {
                sink(i, *z);
            }
            return;
        }
        let n = self.n;
        if self.dims == 2 {
            for (p, chunk) in data.chunks_exact_mut(n * n).enumerate() {
                plan.process_with_scratch(chunk, &mut scratch.inner);
                let base = p * n * n;
                column_pass_consume(plan.as_ref(), chunk, n, n, TILE, scratch, |i, z| {
                    sink(base + i, z)
                });
            }
            return;
        }
        for chunk in data.chunks_exact_mut(n * n) {
            plan.process_with_scratch(chunk, &mut scratch.inner);
            column_pass(plan.as_ref(), chunk, n, n, TILE, scratch);
        }
        column_pass_consume(plan.as_ref(), data, n, n * n, TILE, scratch, sink);
    }

    fn transform(&self, data: &mut [C64], scratch: &mut FftScratch, inverse: bool) {
        assert_eq!(data.len(), self.len());
        let plan = if inverse { &self.inv } else { &self.fwd };
        if self.dims == 1 {
            plan.process_with_scratch(data, &mut scratch.inner);
            return;
        }
        let n = self.n;
        // Axes 0 and 1 run back to back on one n*n plane while it is still
        // cache-resident: rows directly, then columns through the tile
        // buffer. Strided reads stay contiguous in tiles of TILE columns.
        for chunk in data.chunks_exact_mut(n * n) {
            plan.process_with_scratch(chunk, &mut scratch.inner);
            column_pass(plan.as_ref(), chunk, n, n, TILE, scratch);
        }
        // Axis 2 is one strided pass over the whole cube.
        if self.dims == 3 {
            column_pass(plan.as_ref(), data, n, n * n, TILE, scratch);
        }
    }
}

/// Columns are gathered and scattered in groups of this many so the strided
/// accesses touch whole cache lines.
const TILE: usize = 32;

/// Transform every length-`n` column of stride `stride` in `data`, gathering
/// `width <= tile` adjacent columns at a time into `scratch.columns`.
fn column_pass(
    plan: &dyn Fft<f64>,
    data: &mut [C64],
    n: usize,
    stride: usize,
    tile: usize,
    scratch: &mut FftScratch,
) {
    let cols = &mut scratch.columns;
    for plane in (0..data.len()).step_by(stride * n) {
        let mut inner = 0;
        while inner < stride {
            let width = tile.min(stride - inner);
            for i in 0..n {
                let src = plane + i * stride + inner;
                for j in 0..width {
                    cols[j * n + i] = data[src + j];
                }
            }
            plan.process_with_scratch(&mut cols[..width * n], &mut scratch.inner);
            for i in 0..n {
                let dst = plane + i * stride + inner;
                for j in 0..width {
                    data[dst + j] = cols[j * n + i];
                }
            }
            inner += width;
        }
    }
}

/// Like [`column_pass`], but hands each transformed element to `sink` instead
/// of scattering it back into `data`.
fn column_pass_consume(
    plan: &dyn Fft<f64>,
    data: &[C64],
    n: usize,
    stride: usize,
    tile: usize,
    scratch: &mut FftScratch,
    mut sink: impl FnMut(usize, C64),
) {
    let cols = &mut scratch.columns;
    for plane in (0..data.len()).step_by(stride * n) {
        let mut inner = 0;
        while inner < stride {
            let width = tile.min(stride - inner);
            for i in 0..n {
                let src = plane + i * stride + inner;
                for j in 0..width {
                    cols[j * n + i] = data[src + j];
                }
            }
            plan.process_with_scratch(&mut cols[..width * n], &mut scratch.inner);
            for i in 0..n {
                let dst = plane + i * stride + inner;
                for j in 0..width {
                    sink(dst + j, cols[j * n + i]);
                }
            }
            inner += width;
        }
    }
}
