//! Unitary n-dimensional DFT on row-major buffers.
//!
//! Forward: `F(k) = M^{-1/2} sum_x f(x) e(-k.x/M)`; inverse uses `e(+k.x/M)`.

use crate::error::Result;
use crate::field::Field;
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

const BATCH: usize = 64;

/// Unnormalized in-place transform along every axis.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "buffer does not match shape");
    let dims = shape.len();
    for axis in 0..dims {
        let n = shape[axis];
        if n == 1 {
            continue;
        }
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        if inner == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n * BATCH.min(inner)];
        for o in 0..outer {
            let base = o * n * inner;
            let mut c0 = 0;
            while c0 < inner {
                let b = BATCH.min(inner - c0);
                for j in 0..b {
                    for i in 0..n {
                        buf[j * n + i] = data[base + i * inner + c0 + j];
                    }
                }
                fft.process_with_scratch(&mut buf[..b * n], &mut scratch);
                for j in 0..b {
                    for i in 0..n {
                        data[base + i * inner + c0 + j] = buf[j * n + i];
                    }
                }
                c0 += b;
            }
        }
    }
}

fn unitary(field: &Field, direction: FftDirection) -> Field {
    let mut data = field.data.clone();
    fft_nd(&mut data, &field.grid.samples, direction);
    let s = 1.0 / (data.len() as f64).sqrt();
    for z in &mut data {
        *z *= s;
    }
    Field { grid: field.grid.clone(), data }
}

pub fn dft_forward(field: &Field) -> Result<Field> {
    Ok(unitary(field, FftDirection::Forward))
}

pub fn dft_inverse(spectrum: &Field) -> Result<Field> {
    Ok(unitary(spectrum, FftDirection::Inverse))
}

/// Evaluates `sum_k c_k e(k.x/M)` at every grid point, where `coeffs` is
/// indexed by bin like a field. No normalization.
pub fn synthesize(mut coeffs: Field) -> Field {
    fft_nd(&mut coeffs.data, &coeffs.grid.samples.clone(), FftDirection::Inverse);
    coeffs
}

/// Coefficients `c_k` with `f(x) = sum_k c_k e(k.x/M)`; inverse of [`synthesize`].
pub fn analyze(field: &Field) -> Field {
    let mut data = field.data.clone();
    fft_nd(&mut data, &field.grid.samples, FftDirection::Forward);
    let s = 1.0 / data.len() as f64;
    for z in &mut data {
        *z *= s;
    }
    Field { grid: field.grid.clone(), data }
}
