//! BDF2 / ADI time stepping for the Cahn-Hilliard equation
//! `dC/dt = D lap(C^3 - C - gamma lap C)` on a doubly periodic box.
//!
//! Each step computes
//!
//! ```text
//! Cbar = 2 C^n - C^{n-1}
//! Lx w = -(2/3)(C^n - C^{n-1}) - (2/3) D gamma dt lap^2 Cbar + (2/3) D dt lap(C^3 - C)^n
//! Ly v = w
//! C^{n+1} = Cbar + v
//! ```
//!
//! with `Lx = I + (2/3) D gamma dt d4/dx4` (and `Ly` likewise) inverted as
//! batches of cyclic pentadiagonal systems. The first step uses
//! `C^{-1} = C^0`.

mod diagnostics;
mod terms;

pub use diagnostics::{k1_metric, s_metric, simpson_mean, Diagnostics, SATURATION_MARGIN};
pub use terms::{assemble_rhs, biharmonic, biharmonic_stencil, nonlinear_stencil, nonlinear_term};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fft::FftError;
use crate::grid::{make_tiles, GridError, Grid2D, TilePlan};
use crate::penta::{build_hyperdiffusion_operator, deinterleave_into, interleave_into, Axis, PentaError, PentaFactor};
use crate::stencil::{StencilError, StencilOp};
use crate::workers::Workers;
use terms::{biharmonic_op, nonlinear_op, RhsCoefficients};

#[derive(Debug, Error)]
pub enum ChError {
    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("grid must be at least 5x5 for the biharmonic stencil, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("Simpson averaging needs even dimensions, got {nx}x{ny}")]
    OddDimensions { nx: usize, ny: usize },

    #[error("grids must share shape and spacing")]
    ShapeMismatch,

    #[error("mean of C^2 is {mean_sq}, s(t) is saturated")]
    Saturated { mean_sq: f64 },

    #[error("field has no energy outside the zero mode")]
    ZeroSpectrum,

    #[error(transparent)]
    Grid(#[from] GridError),

    #[error(transparent)]
    Stencil(#[from] StencilError),

    #[error(transparent)]
    Penta(#[from] PentaError),

    #[error(transparent)]
    Fft(#[from] FftError),

    #[error("failed to start worker pool")]
    Workers(#[from] rayon::ThreadPoolBuildError),

    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}

/// Physical and numerical parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChParams {
    /// Mobility.
    pub d: f64,
    /// Gradient-energy coefficient.
    pub gamma: f64,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dt: f64,
    /// Final time.
    pub t_final: f64,
    pub seed: u64,
    /// Initial values are uniform in `[-ic_amplitude, ic_amplitude]`.
    pub ic_amplitude: f64,
    /// When false the `lap(C^3 - C)` term is dropped (linear hyperdiffusion).
    pub nonlinear: bool,
}

impl Default for ChParams {
    fn default() -> Self {
        Self::square(512)
    }
}

impl ChParams {
    /// `n x n` points on `(0, 2 pi)^2`, `dt = 0.1 dx`, `D = 1`, `gamma = 0.01`, `T = 100`.
    pub fn square(n: usize) -> Self {
        let l = std::f64::consts::TAU;
        Self {
            d: 1.0,
            gamma: 0.01,
            nx: n,
            ny: n,
            lx: l,
            ly: l,
            dt: 0.1 * l / n as f64,
            t_final: 100.0,
            seed: 1,
            ic_amplitude: 0.1,
            nonlinear: true,
        }
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Steps needed to reach `t_final`, at least one.
    pub fn num_steps(&self) -> u64 {
        ((self.t_final / self.dt).round() as u64).max(1)
    }

    pub fn validate(&self) -> Result<(), ChError> {
        let bad = |m: &str| Err(ChError::Params(m.to_string()));
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad("D must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("T must be positive");
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return bad("domain lengths must be positive");
        }
        if !(self.ic_amplitude >= 0.0 && self.ic_amplitude.is_finite()) {
            return bad("initial amplitude must be non-negative");
        }
        if !self.nx.is_power_of_two() || !self.ny.is_power_of_two() || self.nx < 8 || self.ny < 8 {
            return bad("nx and ny must be powers of two, at least 8");
        }
        Ok(())
    }
}

/// How the work of one step is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecConfig {
    pub num_tiles: usize,
    pub num_workers: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            num_tiles: 1,
            num_workers: 1,
        }
    }
}

impl ExecConfig {
    pub fn new(num_tiles: usize, num_workers: usize) -> Self {
        Self {
            num_tiles,
            num_workers,
        }
    }
}

/// Uniform random field in `[-amplitude, amplitude]`, reproducible from the
/// seed (ChaCha8 stream, one draw per point in row-major order).
pub fn initial_condition(params: &ChParams) -> Result<Grid2D, ChError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let a = params.ic_amplitude;
    let mut g = Grid2D::new(params.nx, params.ny, params.dx(), params.dy())?;
    for v in g.values_mut() {
        *v = a * (2.0 * rng.random::<f64>() - 1.0);
    }
    Ok(g)
}

/// Fields carried between steps, plus the per-step workspaces.
#[derive(Debug, Clone)]
pub struct ChState {
    pub c_curr: Grid2D,
    pub c_prev: Grid2D,
    pub c_bar: Grid2D,
    pub rhs: Grid2D,
    pub w: Grid2D,
    pub v: Grid2D,
    pub step: u64,
    pub time: f64,
}

impl ChState {
    fn new(c_curr: Grid2D, c_prev: Grid2D) -> Self {
        let z = c_curr.zeros_like();
        Self {
            c_curr,
            c_prev,
            c_bar: z.clone(),
            rhs: z.clone(),
            w: z.clone(),
            v: z,
            step: 0,
            time: 0.0,
        }
    }
}

/// Time stepper with prebuilt stencils, factorized ADI operators and
/// workspaces; stepping allocates no grid-sized buffers.
#[derive(Debug)]
pub struct ChSolver {
    params: ChParams,
    state: ChState,
    workers: Workers,
    tiles: TilePlan,
    nonlinear: StencilOp,
    biharmonic: StencilOp,
    lx: PentaFactor,
    ly: PentaFactor,
    coeffs: RhsCoefficients,
    bih: Grid2D,
    nl: Grid2D,
    batch: Vec<f64>,
}

impl ChSolver {
    /// Solver started from the seeded random initial condition.
    pub fn new(params: ChParams, exec: ExecConfig) -> Result<Self, ChError> {
        params.validate()?;
        let c0 = initial_condition(&params)?;
        Self::from_fields(params, exec, c0.clone(), c0)
    }

    /// Solver started from explicit `C^n` and `C^{n-1}`.
    pub fn from_fields(
        params: ChParams,
        exec: ExecConfig,
        c_curr: Grid2D,
        c_prev: Grid2D,
    ) -> Result<Self, ChError> {
        params.validate()?;
        let (nx, ny) = (params.nx, params.ny);
        if c_curr.nx() != nx || c_curr.ny() != ny || !c_curr.same_shape(&c_prev) {
            return Err(ChError::ShapeMismatch);
        }
        let (dx, dy) = (params.dx(), params.dy());
        let coeffs = RhsCoefficients::new(&params);
        let sigma_x = coeffs.hyper / dx.powi(4);
        let sigma_y = coeffs.hyper / dy.powi(4);
        let lx = build_hyperdiffusion_operator(sigma_x, nx, ny, true)?.factorize()?;
        let ly = build_hyperdiffusion_operator(sigma_y, ny, nx, true)?.factorize()?;
        let biharmonic = biharmonic_op(dx, dy);
        let tiles = make_tiles(ny, exec.num_tiles, biharmonic.extents())?;
        let state = ChState::new(c_curr, c_prev);
        Ok(Self {
            workers: Workers::new(exec.num_workers)?,
            tiles,
            nonlinear: nonlinear_op(dx, dy),
            biharmonic,
            lx,
            ly,
            coeffs,
            bih: state.c_curr.zeros_like(),
            nl: state.c_curr.zeros_like(),
            batch: vec![0.0; nx * ny],
            state,
            params,
        })
    }

    pub fn params(&self) -> &ChParams {
        &self.params
    }

    pub fn state(&self) -> &ChState {
        &self.state
    }

    pub fn concentration(&self) -> &Grid2D {
        &self.state.c_curr
    }

    pub fn diagnostics(&self) -> Result<Diagnostics, ChError> {
        Diagnostics::measure(self.state.time, &self.state.c_curr)
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<(), ChError> {
        let Self {
            state,
            workers,
            tiles,
            nonlinear,
            biharmonic,
            lx,
            ly,
            coeffs,
            bih,
            nl,
            batch,
            params,
        } = self;
        let nx = state.c_curr.nx();
        let rows_per_chunk = tiles.tiles()[0].rows() * nx;

        {
            let (c, cp) = (state.c_curr.values(), state.c_prev.values());
            workers.for_each_chunk(state.c_bar.values_mut(), rows_per_chunk, |off, out| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = 2.0 * c[off + k] - cp[off + k];
                }
            });
        }

        biharmonic.apply(&state.c_bar, bih, tiles, workers)?;
        if params.nonlinear {
            nonlinear.apply(&state.c_curr, nl, tiles, workers)?;
        } else {
            nl.fill(0.0);
        }

        {
            let (c, cp) = (state.c_curr.values(), state.c_prev.values());
            let (b, n) = (bih.values(), nl.values());
            let k = *coeffs;
            workers.for_each_chunk(state.rhs.values_mut(), rows_per_chunk, |off, out| {
                for (m, o) in out.iter_mut().enumerate() {
                    let q = off + m;
                    *o = k.combine(c[q], cp[q], b[q], n[q]);
                }
            });
        }

        // x sweep: one system per row
        interleave_into(&state.rhs, Axis::X, batch);
        lx.solve_slice(batch, workers);
        deinterleave_into(batch, Axis::X, &mut state.w);

        // y sweep: one system per column, already interleaved in row-major order
        interleave_into(&state.w, Axis::Y, batch);
        ly.solve_slice(batch, workers);
        deinterleave_into(batch, Axis::Y, &mut state.v);

        {
            let (cb, v) = (state.c_bar.values(), state.v.values());
            workers.for_each_chunk(state.c_prev.values_mut(), rows_per_chunk, |off, out| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = cb[off + k] + v[off + k];
                }
            });
        }
        std::mem::swap(&mut state.c_curr, &mut state.c_prev);
        state.step += 1;
        state.time = state.step as f64 * params.dt;
        Ok(())
    }

    /// Steps until `params.t_final`.
    pub fn advance_to_end(&mut self) -> Result<(), ChError> {
        while self.state.step < self.params.num_steps() {
            self.step()?;
        }
        Ok(())
    }
}

/// Receiver for run output.
pub trait ChSink {
    fn diagnostics(&mut self, d: &Diagnostics) -> Result<(), ChError>;

    fn snapshot(&mut self, _step: u64, _c: &Grid2D) -> Result<(), ChError> {
        Ok(())
    }
}

impl ChSink for Vec<Diagnostics> {
    fn diagnostics(&mut self, d: &Diagnostics) -> Result<(), ChError> {
        self.push(*d);
        Ok(())
    }
}

/// Output cadence and execution layout for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Diagnostics every this many steps (and at step 0).
    pub diag_every: u64,
    /// Snapshots every this many steps (and at step 0), if set.
    pub snapshot_every: Option<u64>,
    pub exec: ExecConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            diag_every: 1,
            snapshot_every: None,
            exec: ExecConfig::default(),
        }
    }
}

/// Initializes, steps to `T` and reports to `sink`. Returns the final solver.
pub fn run(
    params: &ChParams,
    opts: &RunOptions,
    sink: &mut dyn ChSink,
) -> Result<ChSolver, ChError> {
    if opts.diag_every == 0 || opts.snapshot_every == Some(0) {
        return Err(ChError::Params("output cadences must be at least 1".into()));
    }
    let mut solver = ChSolver::new(params.clone(), opts.exec)?;
    let steps = params.num_steps();
    let emit = |solver: &ChSolver, sink: &mut dyn ChSink| -> Result<(), ChError> {
        let step = solver.state.step;
        if step % opts.diag_every == 0 {
            sink.diagnostics(&solver.diagnostics()?)?;
        }
        if let Some(every) = opts.snapshot_every {
            if step % every == 0 {
                sink.snapshot(step, solver.concentration())?;
            }
        }
        Ok(())
    };
    emit(&solver, sink)?;
    while solver.state.step < steps {
        solver.step()?;
        emit(&solver, sink)?;
    }
    Ok(solver)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> ChParams {
        let mut p = ChParams::square(n);
        p.t_final = 10.0 * p.dt;
        p
    }

    #[test]
    fn params_validation() {
        assert!(small(16).validate().is_ok());
        let mut p = small(16);
        p.nx = 24;
        assert!(p.validate().is_err());
        let mut p = small(16);
        p.gamma = 0.0;
        assert!(p.validate().is_err());
        let mut p = small(16);
        p.dt = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn initial_condition_statistics() {
        let mut p = ChParams::square(512);
        let g = initial_condition(&p).unwrap();
        let n = g.len() as f64;
        let mean = g.values().iter().sum::<f64>() / n;
        assert!(mean.abs() <= 3.0 * (0.1 / 3f64.sqrt()) / 512.0);
        assert!(g.values().iter().all(|v| v.abs() <= 0.1));
        assert_eq!(g, initial_condition(&p).unwrap());
        p.ic_amplitude = 0.0;
        assert!(initial_condition(&p).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let mut p = small(16);
        p.ic_amplitude = 0.0;
        let mut s = ChSolver::new(p, ExecConfig::default()).unwrap();
        s.step().unwrap();
        assert!(s.concentration().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constants_are_fixed_points() {
        let p = small(16);
        for c0 in [0.3, -0.77, 1.3] {
            let g = Grid2D::from_fn(16, 16, p.dx(), p.dy(), |_, _| c0).unwrap();
            let mut s = ChSolver::from_fields(p.clone(), ExecConfig::default(), g.clone(), g.clone())
                .unwrap();
            for _ in 0..3 {
                s.step().unwrap();
            }
            assert_eq!(s.concentration(), &g);
        }
    }

    #[test]
    fn step_counts_and_time() {
        let mut p = small(16);
        p.t_final = p.dt;
        let mut diags = Vec::new();
        let s = run(&p, &RunOptions::default(), &mut diags).unwrap();
        assert_eq!(s.state().step, 1);
        assert_eq!(s.state().time, p.dt);
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn zero_amplitude_run_has_unit_s() {
        let mut p = small(16);
        p.ic_amplitude = 0.0;
        let mut diags = Vec::new();
        run(&p, &RunOptions::default(), &mut diags).unwrap();
        assert_eq!(diags.len(), 11);
        assert!(diags.iter().all(|d| d.s == 1.0));
    }
}
