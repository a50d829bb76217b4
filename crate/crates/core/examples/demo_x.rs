//! Eighth-order second derivative in x of `sin(x)` on a 1024 x 512 grid,
//! non-periodic. The four cells at each end of every row are left alone.
//!
//! ```text
//! cargo run --example demo_x
//! ```

use std::f64::consts::TAU;

use tilestencil::operators::eighth_order_second_derivative_x;
use tilestencil::{BoundaryMode, Direction, Grid2D, Residency, StencilPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (nx, ny) = (1024, 512);
    let dx = TAU / nx as f64;
    let input = Grid2D::from_fn(nx, ny, dx, dx, |x, _| x.sin())?;
    let mut output = input.zeros_like();
    output.fill(f64::NAN);

    let mut plan = StencilPlan::create(
        Direction::X,
        BoundaryMode::NonPeriodic,
        eighth_order_second_derivative_x(dx).into(),
        input,
        output,
        4,
        2,
    )?;
    plan.compute(Residency::Host);
    let (_, d2) = plan.destroy();

    println!("{:>5} {:>22} {:>22}", "i", "computed", "expected");
    for i in (0..8).chain(nx / 2..nx / 2 + 2).chain(nx - 8..nx) {
        let x = i as f64 * dx;
        println!("{i:>5} {:>22.15e} {:>22.15e}", d2.get(i, 0), -x.sin());
    }
    let max_err = (4..nx - 4)
        .map(|i| (d2.get(i, 0) + (i as f64 * dx).sin()).abs())
        .fold(0.0, f64::max);
    println!("max interior error: {max_err:.3e}");
    Ok(())
}
