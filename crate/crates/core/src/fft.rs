//! Square 2-D FFTs built from `rustfft` row transforms and blocked transposes.
//!
//! All transforms are unnormalized in the forward direction; the inverse
//! divides by `n²` so that `inverse(forward(x)) == x`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

const BLOCK: usize = 32;

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for bi in (0..n).step_by(BLOCK) {
        for bj in (0..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                for j in bj..(bj + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// Forward 2-D transform leaving the spectrum in transposed layout
/// (`out[kx * n + ky]`). Transfer functions that depend only on `|q|` can be
/// applied in this layout directly.
pub(crate) fn forward_transposed(data: &mut [Complex64], scratch: &mut Vec<Complex64>, n: usize) {
    let (fwd, _) = plans(n);
    scratch.resize(n * n, Complex64::default());
    fwd.process(data);
    transpose(data, scratch, n);
    fwd.process(scratch);
    data.copy_from_slice(scratch);
}

/// Inverse of [`forward_transposed`]: takes a transposed-layout spectrum and
/// returns the field in row-major `[y][x]` layout, normalized by `1/n²`.
pub(crate) fn inverse_from_transposed(data: &mut [Complex64], scratch: &mut Vec<Complex64>, n: usize) {
    let (_, inv) = plans(n);
    scratch.resize(n * n, Complex64::default());
    inv.process(data);
    transpose(data, scratch, n);
    inv.process(scratch);
    let scale = 1.0 / (n * n) as f64;
    for (d, s) in data.iter_mut().zip(scratch.iter()) {
        *d = s * scale;
    }
}

/// Unnormalized forward 2-D DFT in natural `[ky][kx]` layout.
pub fn fft2(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = data.to_vec();
    let mut scratch = Vec::new();
    forward_transposed(&mut out, &mut scratch, n);
    transpose(&out, &mut scratch, n);
    scratch
}

/// Inverse 2-D DFT (normalized by `1/n²`) from natural layout.
pub fn ifft2(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::default(); n * n];
    transpose(data, &mut t, n);
    let mut scratch = Vec::new();
    inverse_from_transposed(&mut t, &mut scratch, n);
    t
}

/// Angular spatial frequency (rad/m) of DFT bin `k` for `n` samples at spacing `dx`.
#[inline]
pub fn angular_frequency(k: usize, n: usize, dx: f64) -> f64 {
    let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / (n as f64 * dx)
}
