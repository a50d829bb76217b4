//! Row-major 2D grids, periodic index arithmetic and y-direction tiling.
//!
//! Every other module in the crate exchanges data as [`Grid2D`]. Values are
//! stored with `i` (x) fastest, so row `j` is the contiguous slice
//! `values[j * nx..(j + 1) * nx]`.

use thiserror::Error;

/// Errors raised while constructing grids or tile plans.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be at least 1x1, got {nx}x{ny}")]
    EmptyGrid { nx: usize, ny: usize },

    #[error("grid spacing must be positive and finite, got dx={dx}, dy={dy}")]
    BadSpacing { dx: f64, dy: f64 },

    #[error("expected {expected} values for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("tile count {num_tiles} is invalid for {ny} rows")]
    BadTileCount { num_tiles: usize, ny: usize },

    #[error("period must be at least 1, got {0}")]
    BadPeriod(i64),
}

/// Row-major field of `f64` samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    values: Vec<f64>,
}

impl Grid2D {
    /// Zero-filled grid.
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self, GridError> {
        Self::from_values(nx, ny, dx, dy, vec![0.0; nx * ny])
    }

    pub fn from_values(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 {
            return Err(GridError::EmptyGrid { nx, ny });
        }
        if !(dx > 0.0 && dx.is_finite() && dy > 0.0 && dy.is_finite()) {
            return Err(GridError::BadSpacing { dx, dy });
        }
        if values.len() != nx * ny {
            return Err(GridError::LengthMismatch {
                expected: nx * ny,
                actual: values.len(),
            });
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            values,
        })
    }

    /// Samples `f(x_i, y_j)` with `x_i = i * dx`, `y_j = j * dy`.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(i as f64 * dx, j as f64 * dy));
            }
        }
        Self::from_values(nx, ny, dx, dy, values)
    }

    /// Zero grid with the same shape and spacing as `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            dx: self.dx,
            dy: self.dy,
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[linear_index(i, j, self.nx)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = linear_index(i, j, self.nx);
        self.values[k] = value;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }

    /// True when both grids have identical `nx`, `ny`, `dx` and `dy`.
    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.dx == other.dx && self.dy == other.dy
    }

    /// Copies values from `other`, which must have the same shape.
    pub fn copy_from(&mut self, other: &Grid2D) {
        assert!(self.same_shape(other), "copy_from: shape mismatch");
        self.values.copy_from_slice(&other.values);
    }
}

/// Offset of `(i, j)` in a row-major grid of width `nx`.
#[inline]
pub fn linear_index(i: usize, j: usize, nx: usize) -> usize {
    debug_assert!(i < nx, "x index {i} out of range for nx={nx}");
    j * nx + i
}

/// Maps any signed index onto `[0, n)`.
pub fn wrap(i: i64, n: i64) -> Result<usize, GridError> {
    if n < 1 {
        return Err(GridError::BadPeriod(n));
    }
    Ok(i.rem_euclid(n) as usize)
}

#[inline]
pub(crate) fn wrap_unchecked(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Swaps the roles of x and y: `result(i, j) = g(j, i)`.
pub fn transpose(g: &Grid2D) -> Grid2D {
    let mut out = Grid2D {
        nx: g.ny,
        ny: g.nx,
        dx: g.dy,
        dy: g.dx,
        values: vec![0.0; g.values.len()],
    };
    transpose_into(g.values(), g.nx, g.ny, out.values_mut());
    out
}

const TRANSPOSE_BLOCK: usize = 32;

/// Transposes an `nx` by `ny` row-major buffer into `dst` (`ny` by `nx`).
pub(crate) fn transpose_into(src: &[f64], nx: usize, ny: usize, dst: &mut [f64]) {
    debug_assert_eq!(src.len(), nx * ny);
    debug_assert_eq!(dst.len(), nx * ny);
    for jb in (0..ny).step_by(TRANSPOSE_BLOCK) {
        for ib in (0..nx).step_by(TRANSPOSE_BLOCK) {
            for j in jb..(jb + TRANSPOSE_BLOCK).min(ny) {
                for i in ib..(ib + TRANSPOSE_BLOCK).min(nx) {
                    dst[i * ny + j] = src[j * nx + i];
                }
            }
        }
    }
}

/// How far a stencil reaches from its evaluation point, in grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Extents {
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
}

impl Extents {
    pub const fn new(left: usize, right: usize, top: usize, bottom: usize) -> Self {
        Self {
            left,
            right,
            top,
            bottom,
        }
    }

    /// Extents of an x-only stencil.
    pub const fn x(left: usize, right: usize) -> Self {
        Self::new(left, right, 0, 0)
    }

    /// Extents of a y-only stencil.
    pub const fn y(top: usize, bottom: usize) -> Self {
        Self::new(0, 0, top, bottom)
    }

    /// Symmetric square window of half-width `r`.
    pub const fn square(r: usize) -> Self {
        Self::new(r, r, r, r)
    }

    pub const fn width(&self) -> usize {
        self.left + self.right + 1
    }

    pub const fn height(&self) -> usize {
        self.top + self.bottom + 1
    }

    /// Number of points in the rectangular window.
    pub const fn window_len(&self) -> usize {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    Periodic,
    NonPeriodic,
}

/// A contiguous band of rows `[begin, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub begin: usize,
    pub end: usize,
}

impl Tile {
    pub fn rows(&self) -> usize {
        self.end - self.begin
    }
}

/// Decomposition of `[0, ny)` into ordered, disjoint row bands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    ny: usize,
    tiles: Vec<Tile>,
    halo_top: usize,
    halo_bottom: usize,
}

impl TilePlan {
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_tiles(&self) -> usize {
        self.tiles.len()
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn halo_top(&self) -> usize {
        self.halo_top
    }

    pub fn halo_bottom(&self) -> usize {
        self.halo_bottom
    }
}

/// Splits `ny` rows into `num_tiles` bands, larger bands first.
pub fn make_tiles(ny: usize, num_tiles: usize, ext: Extents) -> Result<TilePlan, GridError> {
    if num_tiles == 0 || num_tiles > ny {
        return Err(GridError::BadTileCount { num_tiles, ny });
    }
    let base = ny / num_tiles;
    let extra = ny % num_tiles;
    let mut tiles = Vec::with_capacity(num_tiles);
    let mut begin = 0;
    for t in 0..num_tiles {
        let rows = base + usize::from(t < extra);
        tiles.push(Tile {
            begin,
            end: begin + rows,
        });
        begin += rows;
    }
    debug_assert_eq!(begin, ny);
    Ok(TilePlan {
        ny,
        tiles,
        halo_top: ext.top,
        halo_bottom: ext.bottom,
    })
}

/// Splits `values` (a row-major `nx`-wide buffer) into one mutable slice per tile.
pub(crate) fn split_rows_mut<'a>(
    mut values: &'a mut [f64],
    nx: usize,
    plan: &TilePlan,
) -> Vec<(Tile, &'a mut [f64])> {
    let mut out = Vec::with_capacity(plan.num_tiles());
    for tile in plan.tiles() {
        let (head, tail) = values.split_at_mut(tile.rows() * nx);
        out.push((*tile, head));
        values = tail;
    }
    out
}
