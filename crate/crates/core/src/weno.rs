//! Fifth-order WENO upwind derivatives for periodic 2D advection.
//!
//! [`weno_advect`] returns `-(u dphi/dx + v dphi/dy)` where each derivative
//! is the Hamilton-Jacobi WENO5 approximation biased against the local
//! velocity: left-biased where the velocity component is `>= 0`,
//! right-biased where it is negative.

use thiserror::Error;

use crate::grid::{make_tiles, split_rows_mut, wrap_unchecked, Grid2D, GridError, TilePlan};
use crate::workers::Workers;

/// Regularization added to the smoothness indicators.
pub const WENO_EPSILON: f64 = 1e-6;

/// Ideal weights of the three candidate stencils.
pub const IDEAL_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

#[derive(Debug, Error)]
pub enum WenoError {
    #[error("velocity and field grids differ in shape")]
    ShapeMismatch,

    #[error("WENO5 needs at least 7 points per axis, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize },

    #[error(transparent)]
    Grid(#[from] GridError),

    #[error("failed to start worker pool")]
    Workers(#[from] rayon::ThreadPoolBuildError),
}

/// Velocity components sampled on the same grid as the advected field.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u: Grid2D,
    pub v: Grid2D,
}

impl VelocityField {
    pub fn new(u: Grid2D, v: Grid2D) -> Result<Self, WenoError> {
        if !u.same_shape(&v) {
            return Err(WenoError::ShapeMismatch);
        }
        Ok(Self { u, v })
    }

    /// Spatially constant velocity `(u, v)` on the grid of `like`.
    pub fn uniform(like: &Grid2D, u: f64, v: f64) -> Self {
        let mut ug = like.zeros_like();
        ug.fill(u);
        let mut vg = like.zeros_like();
        vg.fill(v);
        Self { u: ug, v: vg }
    }
}

/// Which side the derivative stencil leans toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    /// Uses points `i-3..=i+2`; selected for non-negative velocity.
    Left,
    /// Uses points `i-2..=i+3`; selected for negative velocity.
    Right,
}

pub fn select_bias(velocity: f64) -> Bias {
    if velocity < 0.0 {
        Bias::Right
    } else {
        Bias::Left
    }
}

/// WENO5 combination of five consecutive one-sided differences, ordered
/// from far upwind to far downwind.
#[inline]
pub fn weno5(d: [f64; 5]) -> f64 {
    let [v1, v2, v3, v4, v5] = d;
    let p1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0;
    let p2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0;
    let p3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0;

    let s1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3).powi(2) + 0.25 * (v1 - 4.0 * v2 + 3.0 * v3).powi(2);
    let s2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4).powi(2) + 0.25 * (v2 - v4).powi(2);
    let s3 = 13.0 / 12.0 * (v3 - 2.0 * v4 + v5).powi(2) + 0.25 * (3.0 * v3 - 4.0 * v4 + v5).powi(2);

    let a1 = IDEAL_WEIGHTS[0] / (WENO_EPSILON + s1).powi(2);
    let a2 = IDEAL_WEIGHTS[1] / (WENO_EPSILON + s2).powi(2);
    let a3 = IDEAL_WEIGHTS[2] / (WENO_EPSILON + s3).powi(2);
    (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3)
}

/// Biased derivative from the seven samples `f[k-3..=k+3]` (periodic
/// gather done by the caller), spacing `h`.
#[inline]
fn derivative(f: [f64; 7], h: f64, bias: Bias) -> f64 {
    let diff = |a: usize| (f[a + 1] - f[a]) / h;
    match bias {
        Bias::Left => weno5([diff(0), diff(1), diff(2), diff(3), diff(4)]),
        Bias::Right => weno5([diff(5), diff(4), diff(3), diff(2), diff(1)]),
    }
}

fn samples_x(phi: &Grid2D, i: usize, j: usize) -> [f64; 7] {
    let row = phi.row(j);
    std::array::from_fn(|k| row[wrap_unchecked(i as isize + k as isize - 3, phi.nx())])
}

fn samples_y(phi: &Grid2D, i: usize, j: usize) -> [f64; 7] {
    std::array::from_fn(|k| phi.get(i, wrap_unchecked(j as isize + k as isize - 3, phi.ny())))
}

/// Periodic WENO5 x-derivative at `(i, j)`.
pub fn derivative_x(phi: &Grid2D, i: usize, j: usize, bias: Bias) -> f64 {
    derivative(samples_x(phi, i, j), phi.dx(), bias)
}

/// Periodic WENO5 y-derivative at `(i, j)`.
pub fn derivative_y(phi: &Grid2D, i: usize, j: usize, bias: Bias) -> f64 {
    derivative(samples_y(phi, i, j), phi.dy(), bias)
}

fn check(phi: &Grid2D, vel: &VelocityField) -> Result<(), WenoError> {
    if !phi.same_shape(&vel.u) || !phi.same_shape(&vel.v) {
        return Err(WenoError::ShapeMismatch);
    }
    if phi.nx() < 7 || phi.ny() < 7 {
        return Err(WenoError::GridTooSmall {
            nx: phi.nx(),
            ny: phi.ny(),
        });
    }
    Ok(())
}

/// `-(u phi_x + v phi_y)` on a periodic grid, serial.
pub fn weno_advect(phi: &Grid2D, vel: &VelocityField) -> Result<Grid2D, WenoError> {
    check(phi, vel)?;
    let mut out = phi.zeros_like();
    let tiles = make_tiles(phi.ny(), 1, crate::grid::Extents::square(3))?;
    weno_advect_into(phi, vel, &mut out, &tiles, &Workers::serial())?;
    Ok(out)
}

/// Tiled, parallel form of [`weno_advect`].
pub fn weno_advect_into(
    phi: &Grid2D,
    vel: &VelocityField,
    out: &mut Grid2D,
    tiles: &TilePlan,
    workers: &Workers,
) -> Result<(), WenoError> {
    check(phi, vel)?;
    if !phi.same_shape(out) || tiles.ny() != phi.ny() {
        return Err(WenoError::ShapeMismatch);
    }
    let nx = phi.nx();
    let bands = split_rows_mut(out.values_mut(), nx, tiles);
    workers.for_each(bands, |(tile, band)| {
        for j in tile.begin..tile.end {
            let row = &mut band[(j - tile.begin) * nx..(j - tile.begin + 1) * nx];
            for (i, o) in row.iter_mut().enumerate() {
                let u = vel.u.get(i, j);
                let v = vel.v.get(i, j);
                let px = derivative_x(phi, i, j, select_bias(u));
                let py = derivative_y(phi, i, j, select_bias(v));
                *o = -(u * px + v * py);
            }
        }
    });
    Ok(())
}
