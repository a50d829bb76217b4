//! Weight and function stencils applied in x, y or xy over tiled grids.
//!
//! The lifecycle mirrors a create / compute / swap / destroy API:
//!
//! ```
//! use tilestencil::grid::{BoundaryMode, Grid2D};
//! use tilestencil::stencil::{Direction, Residency, StencilKind, StencilPlan, WeightStencil};
//!
//! let n = 64;
//! let dx = std::f64::consts::TAU / n as f64;
//! let input = Grid2D::from_fn(n, 4, dx, dx, |x, _| x.sin()).unwrap();
//! let output = input.zeros_like();
//! let inv = 1.0 / (dx * dx);
//! let sten = WeightStencil::x(1, 1, vec![inv, -2.0 * inv, inv]).unwrap();
//!
//! let mut plan = StencilPlan::create(
//!     Direction::X,
//!     BoundaryMode::Periodic,
//!     StencilKind::Weights(sten),
//!     input,
//!     output,
//!     2,
//!     1,
//! )
//! .unwrap();
//! plan.compute(Residency::Host);
//! let (_input, second_derivative) = plan.destroy();
//! assert!((second_derivative.get(16, 0) + 1.0).abs() < 1e-3);
//! ```
//!
//! Input and output are owned by the plan, so they can never alias:
//!
//! ```compile_fail
//! use tilestencil::grid::{BoundaryMode, Grid2D};
//! use tilestencil::stencil::{Direction, StencilKind, StencilPlan, WeightStencil};
//!
//! let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
//! let sten = WeightStencil::x(0, 0, vec![1.0]).unwrap();
//! let plan = StencilPlan::create(
//!     Direction::X, BoundaryMode::Periodic, StencilKind::Weights(sten), g, g, 1, 1,
//! );
//! ```

use std::fmt;
use std::sync::Arc;

use rayon::ThreadPoolBuildError;
use thiserror::Error;

use crate::grid::{
    make_tiles, split_rows_mut, wrap_unchecked, BoundaryMode, Extents, Grid2D, GridError, Tile,
    TilePlan,
};
use crate::workers::Workers;

#[derive(Debug, Error)]
pub enum StencilError {
    #[error(transparent)]
    Grid(#[from] GridError),

    #[error("stencil needs {expected} weights for its extents, got {actual}")]
    WeightCount { expected: usize, actual: usize },

    #[error("stencil weights must not be empty")]
    EmptyWeights,

    #[error("stencil weight {index} is not finite")]
    NonFiniteWeight { index: usize },

    #[error("{direction:?} stencil cannot have extents {ext:?}")]
    DirectionExtents { direction: Direction, ext: Extents },

    #[error("stencil extents {ext:?} do not fit a {nx}x{ny} grid")]
    ExtentsExceedGrid { ext: Extents, nx: usize, ny: usize },

    #[error("input and output grids must share shape and spacing")]
    ShapeMismatch,

    #[error("stencil window at ({i}, {j}) leaves the non-periodic domain")]
    WindowOutOfDomain { i: usize, j: usize },

    #[error("failed to start worker pool")]
    Workers(#[from] ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
    XY,
}

/// Where results should live after a compute. Shared memory makes this a
/// no-op; it is kept so host/device style call sites translate directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Residency {
    #[default]
    Host,
    Device,
}

/// Linear stencil: a weight per point of the rectangular window.
///
/// Weights are ordered from the top-left of the window, left to right in
/// `i`, then row by row in `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStencil {
    ext: Extents,
    weights: Vec<f64>,
}

impl WeightStencil {
    pub fn new(ext: Extents, weights: Vec<f64>) -> Result<Self, StencilError> {
        if weights.is_empty() {
            return Err(StencilError::EmptyWeights);
        }
        if weights.len() != ext.window_len() {
            return Err(StencilError::WeightCount {
                expected: ext.window_len(),
                actual: weights.len(),
            });
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(StencilError::NonFiniteWeight { index });
        }
        Ok(Self { ext, weights })
    }

    pub fn x(left: usize, right: usize, weights: Vec<f64>) -> Result<Self, StencilError> {
        Self::new(Extents::x(left, right), weights)
    }

    pub fn y(top: usize, bottom: usize, weights: Vec<f64>) -> Result<Self, StencilError> {
        Self::new(Extents::y(top, bottom), weights)
    }

    pub fn extents(&self) -> Extents {
        self.ext
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Signature of a window function: `(window, coefficients, row_stride)`.
///
/// `window` holds the gathered stencil window in the same order as
/// [`WeightStencil`] weights; `row_stride` is the window width.
pub type WindowFn = dyn Fn(&[f64], &[f64], usize) -> f64 + Send + Sync;

/// Stencil evaluated by a user function over the gathered window.
#[derive(Clone)]
pub struct FunctionStencil {
    ext: Extents,
    func: Arc<WindowFn>,
    coe: Vec<f64>,
}

impl fmt::Debug for FunctionStencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionStencil")
            .field("ext", &self.ext)
            .field("coe", &self.coe)
            .finish_non_exhaustive()
    }
}

impl FunctionStencil {
    pub fn new<F>(ext: Extents, coe: Vec<f64>, func: F) -> Self
    where
        F: Fn(&[f64], &[f64], usize) -> f64 + Send + Sync + 'static,
    {
        Self {
            ext,
            func: Arc::new(func),
            coe,
        }
    }

    pub fn extents(&self) -> Extents {
        self.ext
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coe
    }

    pub fn num_coefficients(&self) -> usize {
        self.coe.len()
    }

    #[inline]
    fn call(&self, window: &[f64]) -> f64 {
        (self.func)(window, &self.coe, self.ext.width())
    }
}

#[derive(Debug, Clone)]
pub enum StencilKind {
    Weights(WeightStencil),
    Function(FunctionStencil),
}

impl StencilKind {
    pub fn extents(&self) -> Extents {
        match self {
            StencilKind::Weights(s) => s.extents(),
            StencilKind::Function(s) => s.extents(),
        }
    }
}

impl From<WeightStencil> for StencilKind {
    fn from(s: WeightStencil) -> Self {
        StencilKind::Weights(s)
    }
}

impl From<FunctionStencil> for StencilKind {
    fn from(s: FunctionStencil) -> Self {
        StencilKind::Function(s)
    }
}

/// A validated stencil with its direction and boundary treatment, not yet
/// bound to any grids.
#[derive(Debug, Clone)]
pub struct StencilOp {
    direction: Direction,
    mode: BoundaryMode,
    kind: StencilKind,
}

impl StencilOp {
    pub fn new(
        direction: Direction,
        mode: BoundaryMode,
        kind: impl Into<StencilKind>,
    ) -> Result<Self, StencilError> {
        let kind = kind.into();
        let ext = kind.extents();
        let ok = match direction {
            Direction::X => ext.top == 0 && ext.bottom == 0,
            Direction::Y => ext.left == 0 && ext.right == 0,
            Direction::XY => true,
        };
        if !ok {
            return Err(StencilError::DirectionExtents { direction, ext });
        }
        Ok(Self {
            direction,
            mode,
            kind,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn kind(&self) -> &StencilKind {
        &self.kind
    }

    pub fn extents(&self) -> Extents {
        self.kind.extents()
    }

    /// Checks that the window fits inside an `nx` by `ny` grid.
    pub fn check_fits(&self, nx: usize, ny: usize) -> Result<(), StencilError> {
        let ext = self.extents();
        if ext.width() > nx || ext.height() > ny {
            return Err(StencilError::ExtentsExceedGrid { ext, nx, ny });
        }
        Ok(())
    }

    /// Applies the stencil from `input` into `output` over the given tiles.
    ///
    /// In non-periodic mode the frame cells of `output` are not written.
    pub fn apply(
        &self,
        input: &Grid2D,
        output: &mut Grid2D,
        tiles: &TilePlan,
        workers: &Workers,
    ) -> Result<(), StencilError> {
        if !input.same_shape(output) {
            return Err(StencilError::ShapeMismatch);
        }
        self.check_fits(input.nx(), input.ny())?;
        if tiles.ny() != input.ny() {
            return Err(StencilError::ShapeMismatch);
        }
        let nx = input.nx();
        let bands = split_rows_mut(output.values_mut(), nx, tiles);
        workers.for_each(bands, |(tile, band)| self.apply_tile(input, tile, band));
        Ok(())
    }

    /// Convenience single-tile, serial application into a fresh zeroed grid.
    pub fn evaluate(&self, input: &Grid2D) -> Result<Grid2D, StencilError> {
        let mut out = input.zeros_like();
        let tiles = make_tiles(input.ny(), 1, self.extents())?;
        self.apply(input, &mut out, &tiles, &Workers::serial())?;
        Ok(out)
    }

    fn apply_tile(&self, input: &Grid2D, tile: Tile, band: &mut [f64]) {
        let nx = input.nx();
        let ny = input.ny();
        let ext = self.extents();
        let mut row_offsets = vec![0usize; ext.height()];
        let mut scratch = match &self.kind {
            StencilKind::Function(_) => vec![0.0; ext.window_len()],
            StencilKind::Weights(_) => Vec::new(),
        };
        let (i_lo, i_hi) = match self.mode {
            BoundaryMode::Periodic => (0, nx),
            BoundaryMode::NonPeriodic => (ext.left, nx - ext.right),
        };
        for j in tile.begin..tile.end {
            if self.mode == BoundaryMode::NonPeriodic && (j < ext.top || j + ext.bottom >= ny) {
                continue;
            }
            for (q, off) in row_offsets.iter_mut().enumerate() {
                let r = j as isize + q as isize - ext.top as isize;
                *off = wrap_unchecked(r, ny) * nx;
            }
            let out_row = &mut band[(j - tile.begin) * nx..(j - tile.begin + 1) * nx];
            let src = input.values();
            match &self.kind {
                StencilKind::Weights(s) => {
                    let (seg_lo, seg_hi) = (i_lo.max(ext.left), i_hi.min(nx - ext.right));
                    for (i, out) in out_row.iter_mut().enumerate().take(i_hi).skip(i_lo) {
                        if i < seg_lo || i >= seg_hi {
                            *out = weighted_sum(src, nx, &row_offsets, s.weights(), ext, i);
                        }
                    }
                    if seg_lo < seg_hi {
                        accumulate_rows(
                            src,
                            &row_offsets,
                            s.weights(),
                            ext,
                            seg_lo,
                            &mut out_row[seg_lo..seg_hi],
                        );
                    }
                }
                StencilKind::Function(s) => {
                    for (i, out) in out_row.iter_mut().enumerate().take(i_hi).skip(i_lo) {
                        gather(src, nx, &row_offsets, ext, i, &mut scratch);
                        *out = s.call(&scratch);
                    }
                }
            }
        }
    }
}

/// Row-major accumulation over the window; the order is fixed so that every
/// code path produces the same bits.
#[inline]
fn weighted_sum(
    src: &[f64],
    nx: usize,
    row_offsets: &[usize],
    weights: &[f64],
    ext: Extents,
    i: usize,
) -> f64 {
    let w = ext.width();
    let mut acc = 0.0;
    if i >= ext.left && i + ext.right < nx {
        let base = i - ext.left;
        for (q, &off) in row_offsets.iter().enumerate() {
            let row = &src[off + base..off + base + w];
            let ws = &weights[q * w..(q + 1) * w];
            for (wt, x) in ws.iter().zip(row) {
                acc += wt * x;
            }
        }
    } else {
        for (q, &off) in row_offsets.iter().enumerate() {
            let ws = &weights[q * w..(q + 1) * w];
            for (p, wt) in ws.iter().enumerate() {
                let col = wrap_unchecked(i as isize + p as isize - ext.left as isize, nx);
                acc += wt * src[off + col];
            }
        }
    }
    acc
}

/// Same sums as [`weighted_sum`] for the points `seg_lo..seg_lo + out.len()`,
/// none of which wrap in x, accumulated one weight at a time across the row.
fn accumulate_rows(
    src: &[f64],
    row_offsets: &[usize],
    weights: &[f64],
    ext: Extents,
    seg_lo: usize,
    out: &mut [f64],
) {
    let w = ext.width();
    let len = out.len();
    out.fill(0.0);
    for (q, &off) in row_offsets.iter().enumerate() {
        for (p, &wt) in weights[q * w..(q + 1) * w].iter().enumerate() {
            let start = off + seg_lo - ext.left + p;
            for (o, x) in out.iter_mut().zip(&src[start..start + len]) {
                *o += wt * x;
            }
        }
    }
}

#[inline]
fn gather(src: &[f64], nx: usize, row_offsets: &[usize], ext: Extents, i: usize, out: &mut [f64]) {
    let w = ext.width();
    if i >= ext.left && i + ext.right < nx {
        let base = i - ext.left;
        for (q, &off) in row_offsets.iter().enumerate() {
            out[q * w..(q + 1) * w].copy_from_slice(&src[off + base..off + base + w]);
        }
    } else {
        for (q, &off) in row_offsets.iter().enumerate() {
            for p in 0..w {
                let col = wrap_unchecked(i as isize + p as isize - ext.left as isize, nx);
                out[q * w + p] = src[off + col];
            }
        }
    }
}

fn window_rows(
    input: &Grid2D,
    ext: Extents,
    i: usize,
    j: usize,
    mode: BoundaryMode,
) -> Result<Vec<usize>, StencilError> {
    let (nx, ny) = (input.nx(), input.ny());
    if i >= nx || j >= ny {
        return Err(StencilError::WindowOutOfDomain { i, j });
    }
    if mode == BoundaryMode::NonPeriodic
        && (i < ext.left || i + ext.right >= nx || j < ext.top || j + ext.bottom >= ny)
    {
        return Err(StencilError::WindowOutOfDomain { i, j });
    }
    Ok((0..ext.height())
        .map(|q| wrap_unchecked(j as isize + q as isize - ext.top as isize, ny) * nx)
        .collect())
}

/// Reference evaluation of a weight stencil at a single point.
pub fn apply_weights_at(
    input: &Grid2D,
    sten: &WeightStencil,
    i: usize,
    j: usize,
    mode: BoundaryMode,
) -> Result<f64, StencilError> {
    let ext = sten.extents();
    let rows = window_rows(input, ext, i, j, mode)?;
    Ok(weighted_sum(
        input.values(),
        input.nx(),
        &rows,
        sten.weights(),
        ext,
        i,
    ))
}

/// Reference evaluation of a function stencil at a single point.
pub fn apply_function_at(
    input: &Grid2D,
    sten: &FunctionStencil,
    i: usize,
    j: usize,
    mode: BoundaryMode,
) -> Result<f64, StencilError> {
    let ext = sten.extents();
    let rows = window_rows(input, ext, i, j, mode)?;
    let mut window = vec![0.0; ext.window_len()];
    gather(input.values(), input.nx(), &rows, ext, i, &mut window);
    Ok(sten.call(&window))
}

/// A stencil bound to an input and an output grid, with its tile
/// decomposition and worker pool.
#[derive(Debug)]
pub struct StencilPlan {
    op: StencilOp,
    tiles: TilePlan,
    workers: Workers,
    input: Grid2D,
    output: Grid2D,
}

impl StencilPlan {
    pub fn create(
        direction: Direction,
        mode: BoundaryMode,
        kind: StencilKind,
        input: Grid2D,
        output: Grid2D,
        num_tiles: usize,
        num_workers: usize,
    ) -> Result<Self, StencilError> {
        let op = StencilOp::new(direction, mode, kind)?;
        Self::from_op(op, input, output, num_tiles, Workers::new(num_workers)?)
    }

    /// Builds a plan around an existing operator and pool.
    pub fn from_op(
        op: StencilOp,
        input: Grid2D,
        output: Grid2D,
        num_tiles: usize,
        workers: Workers,
    ) -> Result<Self, StencilError> {
        if !input.same_shape(&output) {
            return Err(StencilError::ShapeMismatch);
        }
        op.check_fits(input.nx(), input.ny())?;
        let tiles = make_tiles(input.ny(), num_tiles, op.extents())?;
        Ok(Self {
            op,
            tiles,
            workers,
            input,
            output,
        })
    }

    /// Applies the stencil to the input, writing the output.
    pub fn compute(&mut self, _residency: Residency) {
        self.op
            .apply(&self.input, &mut self.output, &self.tiles, &self.workers)
            .expect("plan invariants were checked at creation");
    }

    /// Exchanges the input and output bindings.
    pub fn swap(&mut self) {
        std::mem::swap(&mut self.input, &mut self.output);
    }

    /// Tears the plan down and hands the grids back as `(input, output)`.
    pub fn destroy(self) -> (Grid2D, Grid2D) {
        (self.input, self.output)
    }

    pub fn op(&self) -> &StencilOp {
        &self.op
    }

    pub fn tiles(&self) -> &TilePlan {
        &self.tiles
    }

    pub fn num_workers(&self) -> usize {
        self.workers.count()
    }

    pub fn input(&self) -> &Grid2D {
        &self.input
    }

    pub fn input_mut(&mut self) -> &mut Grid2D {
        &mut self.input
    }

    pub fn output(&self) -> &Grid2D {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut Grid2D {
        &mut self.output
    }
}
