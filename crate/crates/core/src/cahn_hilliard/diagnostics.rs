//! Coarsening diagnostics: Simpson-rule spatial means, `s(t)` and `k1(t)`.

use crate::fft::{fft2d, signed_mode};
use crate::grid::Grid2D;

use super::ChError;

/// Mean-square level at which `s = 1 / (1 - <C^2>)` is treated as a pole.
pub const SATURATION_MARGIN: f64 = 1e-12;

/// One sample of the coarsening diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub s: f64,
    /// `1 / k1`, or NaN when the field has no non-zero modes.
    pub k1_inv: f64,
}

impl Diagnostics {
    pub fn measure(t: f64, c: &Grid2D) -> Result<Self, ChError> {
        let s = s_metric(c)?;
        let k1_inv = match k1_metric(c) {
            Ok(k1) => 1.0 / k1,
            Err(ChError::ZeroSpectrum) => f64::NAN,
            Err(e) => return Err(e),
        };
        Ok(Self { t, s, k1_inv })
    }
}

/// Composite Simpson weights on a periodic axis: the wrapped first sample
/// closes the interval count, so even indices weigh 2 and odd ones 4.
#[inline]
fn simpson_weight(i: usize) -> f64 {
    if i % 2 == 0 {
        2.0
    } else {
        4.0
    }
}

/// Domain average `(1 / (lx ly)) * integral of g` by tensor-product
/// composite Simpson on the periodically closed grid.
pub fn simpson_mean(g: &Grid2D) -> Result<f64, ChError> {
    simpson_mean_by(g, |v| v)
}

fn simpson_mean_by(g: &Grid2D, f: impl Fn(f64) -> f64) -> Result<f64, ChError> {
    let (nx, ny) = (g.nx(), g.ny());
    if nx % 2 != 0 || ny % 2 != 0 {
        return Err(ChError::OddDimensions { nx, ny });
    }
    // Deviations from the first sample, so constants come back exactly.
    let base = f(g.values()[0]);
    let mut total = 0.0;
    for j in 0..ny {
        let row: f64 = g
            .row(j)
            .iter()
            .enumerate()
            .map(|(i, &v)| simpson_weight(i) * (f(v) - base))
            .sum();
        total += simpson_weight(j) * row;
    }
    Ok(base + total / (9.0 * nx as f64 * ny as f64))
}

/// `s = 1 / (1 - <C^2>)`.
pub fn s_metric(c: &Grid2D) -> Result<f64, ChError> {
    let mean_sq = simpson_mean_by(c, |v| v * v)?;
    if mean_sq >= 1.0 - SATURATION_MARGIN {
        return Err(ChError::Saturated { mean_sq });
    }
    Ok(1.0 / (1.0 - mean_sq))
}

/// Spectrally weighted mean wavenumber `sum |C_k|^2 / sum |k|^-1 |C_k|^2`,
/// over all modes except `k = 0`. Wavenumbers are `2 pi m / L` with signed
/// mode numbers `m`.
pub fn k1_metric(c: &Grid2D) -> Result<f64, ChError> {
    let spectrum = fft2d(c)?;
    let (nx, ny) = (c.nx(), c.ny());
    let kx0 = std::f64::consts::TAU / (nx as f64 * c.dx());
    let ky0 = std::f64::consts::TAU / (ny as f64 * c.dy());
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..ny {
        let ky = ky0 * signed_mode(j, ny) as f64;
        for i in 0..nx {
            if i == 0 && j == 0 {
                continue;
            }
            let kx = kx0 * signed_mode(i, nx) as f64;
            let power = spectrum.get(i, j).norm_sqr();
            num += power;
            den += power / kx.hypot(ky);
        }
    }
    if den == 0.0 {
        return Err(ChError::ZeroSpectrum);
    }
    Ok(num / den)
}
