//! 2D complex FFT over power-of-two grids (row transforms, then columns).

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

use crate::grid::Grid2D;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FftError {
    #[error("FFT dimensions must be powers of two, got {nx}x{ny}")]
    NotPowerOfTwo { nx: usize, ny: usize },

    #[error("spectrum has {actual} coefficients, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Unnormalized forward spectrum, row-major like [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    nx: usize,
    ny: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.nx + i]
    }
}

/// Signed mode number of FFT index `i` on an `n`-point axis, in `[-n/2, n/2)`.
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn check_dims(nx: usize, ny: usize) -> Result<(), FftError> {
    if nx.is_power_of_two() && ny.is_power_of_two() {
        Ok(())
    } else {
        Err(FftError::NotPowerOfTwo { nx, ny })
    }
}

fn transform(data: &mut [Complex64], nx: usize, ny: usize, row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
    for r in data.chunks_exact_mut(nx) {
        row.process(r);
    }
    let mut column = vec![Complex64::default(); ny];
    for i in 0..nx {
        for (j, c) in column.iter_mut().enumerate() {
            *c = data[j * nx + i];
        }
        col.process(&mut column);
        for (j, c) in column.iter().enumerate() {
            data[j * nx + i] = *c;
        }
    }
}

/// Forward transform `X[k] = sum_x g[x] exp(-2 pi i k.x / n)`.
pub fn fft2d(g: &Grid2D) -> Result<Spectrum, FftError> {
    let (nx, ny) = (g.nx(), g.ny());
    check_dims(nx, ny)?;
    let mut data: Vec<Complex64> = g.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_forward(nx);
    let col = planner.plan_fft_forward(ny);
    transform(&mut data, nx, ny, &row, &col);
    Ok(Spectrum { nx, ny, data })
}

/// Inverse transform including the `1 / (nx ny)` normalization; returns the
/// complex field.
pub fn ifft2d(s: &Spectrum) -> Result<Vec<Complex64>, FftError> {
    check_dims(s.nx, s.ny)?;
    if s.data.len() != s.nx * s.ny {
        return Err(FftError::LengthMismatch {
            expected: s.nx * s.ny,
            actual: s.data.len(),
        });
    }
    let mut data = s.data.clone();
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_inverse(s.nx);
    let col = planner.plan_fft_inverse(s.ny);
    transform(&mut data, s.nx, s.ny, &row, &col);
    let norm = 1.0 / (s.nx * s.ny) as f64;
    for c in &mut data {
        *c *= norm;
    }
    Ok(data)
}
