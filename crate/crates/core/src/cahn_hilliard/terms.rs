//! Spatial operators of the Cahn-Hilliard right-hand side.

use crate::grid::{BoundaryMode, Extents, Grid2D};
use crate::operators;
use crate::stencil::{Direction, FunctionStencil, StencilOp};

use super::{ChError, ChParams};

pub(crate) const TWO_THIRDS: f64 = 2.0 / 3.0;

/// `(index, weight)` for the non-zero weights, in window order.
fn nonzero(weights: &[f64]) -> Vec<(usize, f64)> {
    weights
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, w)| w != 0.0)
        .collect()
}

/// Laplacian of `c^3 - c`, with the cube taken inside the window function.
///
/// Coefficients are the 3x3 five-point Laplacian weights. Zero weights are
/// skipped; for finite input the sum is the same as over the full window.
pub fn nonlinear_stencil(dx: f64, dy: f64) -> FunctionStencil {
    let coe = operators::laplacian(dx, dy).weights().to_vec();
    let taps = nonzero(&coe);
    FunctionStencil::new(Extents::square(1), coe, move |window, _, _| {
        taps.iter().fold(0.0, |acc, &(k, w)| {
            let x = window[k];
            acc + w * (x * x * x - x)
        })
    })
}

/// Biharmonic over a 5x5 window, evaluated as `sum w_k (c_k - c_centre)`.
///
/// The weights sum to zero, so this equals the plain weighted sum in exact
/// arithmetic; measuring against the centre makes constants map to exactly
/// zero.
pub fn biharmonic_stencil(dx: f64, dy: f64) -> FunctionStencil {
    let coe = operators::biharmonic(dx, dy).weights().to_vec();
    let taps = nonzero(&coe);
    FunctionStencil::new(Extents::square(2), coe, move |window, _, stride| {
        let centre = window[2 * stride + 2];
        taps.iter()
            .fold(0.0, |acc, &(k, w)| acc + w * (window[k] - centre))
    })
}

pub(crate) fn nonlinear_op(dx: f64, dy: f64) -> StencilOp {
    StencilOp::new(
        Direction::XY,
        BoundaryMode::Periodic,
        nonlinear_stencil(dx, dy),
    )
    .expect("3x3 window is valid for XY")
}

pub(crate) fn biharmonic_op(dx: f64, dy: f64) -> StencilOp {
    StencilOp::new(
        Direction::XY,
        BoundaryMode::Periodic,
        biharmonic_stencil(dx, dy),
    )
    .expect("5x5 window is valid for XY")
}

/// `lap(c^3 - c)` with periodic wrap.
pub fn nonlinear_term(c: &Grid2D) -> Result<Grid2D, ChError> {
    Ok(nonlinear_op(c.dx(), c.dy()).evaluate(c)?)
}

/// `dxxxx c + 2 dxxyy c + dyyyy c` with periodic wrap.
pub fn biharmonic(c: &Grid2D) -> Result<Grid2D, ChError> {
    if c.nx() < 5 || c.ny() < 5 {
        return Err(ChError::GridTooSmall {
            nx: c.nx(),
            ny: c.ny(),
        });
    }
    Ok(biharmonic_op(c.dx(), c.dy()).evaluate(c)?)
}

/// Coefficients of the right-hand side terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RhsCoefficients {
    /// `(2/3) D gamma dt`, multiplying the biharmonic of the extrapolation.
    pub hyper: f64,
    /// `(2/3) D dt`, multiplying the nonlinear Laplacian.
    pub nonlinear: f64,
}

impl RhsCoefficients {
    pub fn new(p: &ChParams) -> Self {
        Self {
            hyper: TWO_THIRDS * p.d * p.gamma * p.dt,
            nonlinear: TWO_THIRDS * p.d * p.dt,
        }
    }

    #[inline]
    pub fn combine(&self, c: f64, c_prev: f64, bih: f64, nl: f64) -> f64 {
        -TWO_THIRDS * (c - c_prev) - self.hyper * bih + self.nonlinear * nl
    }
}

/// `-(2/3)(C^n - C^{n-1}) - (2/3) D gamma dt lap^2 Cbar + (2/3) D dt lap(C^3 - C)^n`.
pub fn assemble_rhs(
    c_curr: &Grid2D,
    c_prev: &Grid2D,
    c_bar: &Grid2D,
    params: &ChParams,
) -> Result<Grid2D, ChError> {
    if !c_curr.same_shape(c_prev) || !c_curr.same_shape(c_bar) {
        return Err(ChError::ShapeMismatch);
    }
    let bih = biharmonic(c_bar)?;
    let nl = if params.nonlinear {
        nonlinear_term(c_curr)?
    } else {
        c_curr.zeros_like()
    };
    let k = RhsCoefficients::new(params);
    let mut rhs = c_curr.zeros_like();
    for (idx, r) in rhs.values_mut().iter_mut().enumerate() {
        *r = k.combine(
            c_curr.values()[idx],
            c_prev.values()[idx],
            bih.values()[idx],
            nl.values()[idx],
        );
    }
    Ok(rhs)
}
