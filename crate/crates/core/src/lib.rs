//! Tiled, parallel finite-difference stencils on 2D grids.
//!
//! The crate is organized around a small stencil engine and the numerical
//! pieces built on top of it:
//!
//! - [`grid`]: row-major grids, periodic wrapping, transposes and the
//!   y-direction tile decomposition used as the unit of parallel work.
//! - [`stencil`]: weight and function stencils applied in x, y or xy with
//!   periodic or non-periodic boundaries through a create / compute / swap /
//!   destroy plan.
//! - [`operators`]: standard weight sets (second derivative, eighth-order
//!   second derivative, Laplacian, cross derivative, biharmonic).
//! - [`penta`]: batched, optionally cyclic, pentadiagonal solves in
//!   interleaved layout.
//! - [`cahn_hilliard`]: a BDF2 / ADI Cahn-Hilliard solver with coarsening
//!   diagnostics.
//! - [`weno`]: WENO5 upwind advection terms.
//! - [`bench`], [`io`], [`cli`]: benchmark harness, file formats and the
//!   command-line front end.
//!
//! Runnable walkthroughs live in the `examples/` directory of this crate.

pub mod bench;
pub mod cahn_hilliard;
pub mod cli;
pub mod fft;
pub mod grid;
pub mod io;
pub mod operators;
pub mod penta;
pub mod stencil;
pub mod weno;
pub mod workers;

pub use grid::{BoundaryMode, Extents, Grid2D};
pub use stencil::{Direction, FunctionStencil, Residency, StencilKind, StencilPlan, WeightStencil};
pub use workers::Workers;
