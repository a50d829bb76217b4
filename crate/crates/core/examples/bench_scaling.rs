//! Serial versus multi-worker timing of the Cahn-Hilliard step loop.
//!
//! ```text
//! cargo run --release --example bench_scaling -- [workers]
//! ```

use tilestencil::bench::{bench, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workers: usize = std::env::args().nth(1).map_or(Ok(4), |s| s.parse())?;
    let cfg = BenchConfig {
        sizes: vec![32, 64, 128],
        t_final: 2.0,
        parallel_workers: workers,
        parallel_tiles: workers,
        ..BenchConfig::default()
    };
    print!("{}", bench(&cfg)?.to_csv());
    Ok(())
}
