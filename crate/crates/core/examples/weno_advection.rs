//! WENO5 advection operator `-(u phi_x + v phi_y)` with a rotating velocity
//! field, plus a convergence check on `sin(x)`.
//!
//! ```text
//! cargo run --example weno_advection
//! ```

use std::f64::consts::TAU;

use tilestencil::grid::make_tiles;
use tilestencil::weno::{weno_advect, weno_advect_into, VelocityField};
use tilestencil::{Extents, Grid2D, Workers};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 128;
    let h = TAU / n as f64;
    let phi = Grid2D::from_fn(n, n, h, h, |x, y| (x.sin() * y.cos()).exp())?;
    let u = Grid2D::from_fn(n, n, h, h, |_, y| -(y - 3.0))?;
    let v = Grid2D::from_fn(n, n, h, h, |x, _| x - 3.0)?;
    let vel = VelocityField::new(u, v)?;

    let tiles = make_tiles(n, 8, Extents::square(3))?;
    let mut rate = phi.zeros_like();
    weno_advect_into(&phi, &vel, &mut rate, &tiles, &Workers::new(4)?)?;
    let peak = rate.values().iter().fold(0.0f64, |m, r| m.max(r.abs()));
    println!("rotating flow: max |d phi / dt| = {peak:.4}");

    let mut previous: Option<f64> = None;
    for n in [32, 64, 128, 256] {
        let h = TAU / n as f64;
        let phi = Grid2D::from_fn(n, n, h, h, |x, _| x.sin())?;
        let out = weno_advect(&phi, &VelocityField::uniform(&phi, 1.0, 0.0))?;
        let err = (0..n)
            .map(|i| (out.get(i, 0) + (i as f64 * h).cos()).abs())
            .fold(0.0, f64::max);
        match previous {
            Some(p) => println!("N={n:>4} error {err:.3e} order {:.2}", (p / err).log2()),
            None => println!("N={n:>4} error {err:.3e}"),
        }
        previous = Some(err);
    }
    Ok(())
}
