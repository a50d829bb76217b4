//! The same x-derivative written as a function stencil: the closure sees the
//! gathered window and a coefficient list.
//!
//! ```text
//! cargo run --example demo_x_fun
//! ```

use std::f64::consts::TAU;

use tilestencil::{
    BoundaryMode, Direction, Extents, FunctionStencil, Grid2D, Residency, StencilPlan,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (nx, ny) = (1024, 512);
    let dx = TAU / nx as f64;
    let input = Grid2D::from_fn(nx, ny, dx, dx, |x, _| x.sin())?;
    let output = input.zeros_like();

    let second_diff = FunctionStencil::new(Extents::x(1, 1), vec![1.0 / (dx * dx)], |w, coe, _| {
        coe[0] * (w[0] - 2.0 * w[1] + w[2])
    });
    let mut plan = StencilPlan::create(
        Direction::X,
        BoundaryMode::NonPeriodic,
        second_diff.into(),
        input,
        output,
        8,
        4,
    )?;
    plan.compute(Residency::Host);

    let out = plan.output();
    let max_err = (1..nx - 1)
        .map(|i| (out.get(i, 7) + (i as f64 * dx).sin()).abs())
        .fold(0.0, f64::max);
    println!("max interior error (second order): {max_err:.3e}");
    Ok(())
}
