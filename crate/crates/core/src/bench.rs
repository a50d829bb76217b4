//! Serial versus multi-worker timing of the Cahn-Hilliard solver.
//!
//! For every grid size the solver is built outside the timed region, then
//! only the step loop to `T` is timed. Nothing inside the loop allocates
//! grid-sized buffers or touches files.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::cahn_hilliard::{ChError, ChParams, ChSolver, ExecConfig};
use crate::grid::Grid2D;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Grid sizes `N` (each run is `N x N`).
    pub sizes: Vec<usize>,
    pub t_final: f64,
    /// `dt = dt_factor * 2 pi / N`.
    pub dt_factor: f64,
    pub d: f64,
    pub gamma: f64,
    pub seed: u64,
    pub ic_amplitude: f64,
    pub parallel_workers: usize,
    pub parallel_tiles: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64, 128, 256],
            t_final: 10.0,
            dt_factor: 0.1,
            d: 1.0,
            gamma: 0.01,
            seed: 1,
            ic_amplitude: 0.1,
            parallel_workers: 4,
            parallel_tiles: 4,
        }
    }
}

impl BenchConfig {
    pub fn params(&self, n: usize) -> ChParams {
        let mut p = ChParams::square(n);
        p.dt = self.dt_factor * p.dx();
        p.t_final = self.t_final;
        p.d = self.d;
        p.gamma = self.gamma;
        p.seed = self.seed;
        p.ic_amplitude = self.ic_amplitude;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub steps: u64,
    pub t_serial: f64,
    pub t_parallel: f64,
    pub speedup: f64,
    pub checksum_serial: String,
    pub checksum_parallel: String,
}

impl BenchRow {
    pub fn outputs_identical(&self) -> bool {
        self.checksum_serial == self.checksum_parallel
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `log t_serial` against `log N`.
    pub serial_exponent: f64,
}

impl BenchReport {
    /// `N,t_serial,t_parallel,speedup` followed by `#` comment lines with
    /// the fitted exponent and the final-field checksums.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,t_serial,t_parallel,speedup\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.4}",
                r.n, r.t_serial, r.t_parallel, r.speedup
            );
        }
        let _ = writeln!(s, "# serial_exponent={:.4}", self.serial_exponent);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "# N={} steps={} checksum_serial={} checksum_parallel={} identical={}",
                r.n,
                r.steps,
                r.checksum_serial,
                r.checksum_parallel,
                r.outputs_identical()
            );
        }
        s
    }
}

/// SHA-256 over the little-endian bytes of every value.
pub fn checksum(g: &Grid2D) -> String {
    let mut h = Sha256::new();
    for v in g.values() {
        h.update(v.to_le_bytes());
    }
    format!("{:x}", h.finalize())
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Times the step loop of an already built solver.
pub fn time_to_end(solver: &mut ChSolver) -> Result<Duration, ChError> {
    let start = Instant::now();
    solver.advance_to_end()?;
    Ok(start.elapsed())
}

/// Builds, times and checksums one run.
pub fn timed_run(params: &ChParams, exec: ExecConfig) -> Result<(Duration, u64, String), ChError> {
    let mut solver = ChSolver::new(params.clone(), exec)?;
    let elapsed = time_to_end(&mut solver)?;
    let sum = checksum(solver.concentration());
    Ok((elapsed, solver.state().step, sum))
}

pub fn bench(cfg: &BenchConfig) -> Result<BenchReport, ChError> {
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let params = cfg.params(n);
        let (ts, steps, cs) = timed_run(&params, ExecConfig::new(1, 1))?;
        let tiles = cfg.parallel_tiles.clamp(1, n);
        let (tp, _, cp) = timed_run(&params, ExecConfig::new(tiles, cfg.parallel_workers))?;
        let (ts, tp) = (ts.as_secs_f64(), tp.as_secs_f64());
        rows.push(BenchRow {
            n,
            steps,
            t_serial: ts,
            t_parallel: tp,
            speedup: ts / tp,
            checksum_serial: cs,
            checksum_parallel: cp,
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t_serial).collect();
    let serial_exponent = if rows.len() >= 2 {
        fit_exponent(&ns, &ts)
    } else {
        f64::NAN
    };
    Ok(BenchReport {
        rows,
        serial_exponent,
    })
}
