//! Centered discrete Fourier transforms with continuum normalization.
//!
//! Grids are symmetric around the origin: `x_j = (j - n/2) h` and dual nodes
//! `xi_k = 2 pi k / (n h)` for `k in [-n/2, n/2)`. With the convention
//! `f_hat(xi) = sum_j f(x_j) e^{-i x_j xi} h^3` the forward transform reduces
//! to a plain FFT with alternating-sign twists on both sides.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::sync::Arc;

pub type C64 = Complex64;

/// In-place 1-D FFT lines along every axis of an `n^3` cube stored x-fastest.
/// `inverse` selects the conjugate transform (no 1/n scaling applied).
pub fn fft3_raw(values: &mut [C64], n: usize, inverse: bool) {
    assert_eq!(values.len(), n * n * n);
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let fft: Arc<dyn rustfft::Fft<f64>> = fft;

    // axis 0: contiguous lines
    values.par_chunks_mut(n).for_each(|line| fft.process(line));

    // axis 1: stride n within each z-slab
    let slab = n * n;
    values.par_chunks_mut(slab).for_each(|plane| {
        let mut line = vec![C64::default(); n];
        for ix in 0..n {
            for iy in 0..n {
                line[iy] = plane[ix + n * iy];
            }
            fft.process(&mut line);
            for iy in 0..n {
                plane[ix + n * iy] = line[iy];
            }
        }
    });

    // axis 2: stride n^2; parallelize over xy columns in chunks
    let cols: Vec<usize> = (0..slab).collect();
    let ptr = SendPtr(values.as_mut_ptr());
    cols.par_chunks(n.max(16)).for_each(|chunk| {
        let values = ptr;
        let mut line = vec![C64::default(); n];
        for &c in chunk {
            unsafe {
                let base = values.0.add(c);
                for iz in 0..n {
                    line[iz] = *base.add(slab * iz);
                }
                fft.process(&mut line);
                for iz in 0..n {
                    *base.add(slab * iz) = line[iz];
                }
            }
        }
    });
}

#[derive(Clone, Copy)]
struct SendPtr(*mut C64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

fn parity_sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply the centered-index twist `(-1)^{jx+jy+jz}` in place.
pub fn checkerboard(values: &mut [C64], n: usize) {
    values.par_chunks_mut(n * n).enumerate().for_each(|(iz, plane)| {
        let sz = parity_sign(iz);
        for iy in 0..n {
            let s = sz * parity_sign(iy);
            let row = &mut plane[n * iy..n * (iy + 1)];
            for (ix, v) in row.iter_mut().enumerate() {
                *v *= s * parity_sign(ix);
            }
        }
    });
}

/// Centered forward transform: input samples on the x-grid, output samples on
/// the dual grid, both in centered order. `scale` should be `h^3`.
pub fn centered_fft3(values: &mut [C64], n: usize, scale: f64, inverse: bool) {
    checkerboard(values, n);
    fft3_raw(values, n, inverse);
    checkerboard(values, n);
    // global sign from the half-shift of both grids: ((-1)^{n/2})^3 per axis pair
    let half = n / 2;
    let sign = if (3 * half) % 2 == 0 { 1.0 } else { -1.0 };
    let s = C64::new(sign * scale, 0.0);
    values.par_iter_mut().for_each(|v| *v *= s);
}

/// Dense DFT matrix mapping a centered source grid to arbitrary 1-D targets:
/// `out_k = sum_j in_j e^{sign * i * t_k * s_j}`.
pub fn dft_matrix(sources: &[f64], targets: &[f64], sign: f64) -> nalgebra::DMatrix<C64> {
    let mut m = nalgebra::DMatrix::zeros(targets.len(), sources.len());
    for (k, &t) in targets.iter().enumerate() {
        for (j, &s) in sources.iter().enumerate() {
            m[(k, j)] = C64::from_polar(1.0, sign * t * s);
        }
    }
    m
}
