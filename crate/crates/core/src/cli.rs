//! Command-line front end.
//!
//! ```text
//! tilestencil <demo-x|demo-x-fun|demo-xy|weno-demo|ch-run|ch-bench> [flags]
//! ```
//!
//! Every flag may also be given in a `--config` file, one `key=value` per
//! line with `#` comments, where `key` is the flag name without dashes.
//! Flags on the command line override the file.

use std::ffi::OsString;
use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, ValueEnum};
use thiserror::Error;

use crate::bench::{bench, BenchConfig};
use crate::cahn_hilliard::{run, ChError, ChParams, ChSink, Diagnostics, ExecConfig, RunOptions};
use crate::grid::{BoundaryMode, Extents, Grid2D};
use crate::io::{diagnostics_row, write_diagnostics_header, write_snapshot, IoError};
use crate::operators;
use crate::stencil::{Direction, FunctionStencil, Residency, StencilError, StencilPlan};
use crate::weno::{weno_advect_into, VelocityField, WenoError};
use crate::workers::Workers;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Output(#[from] IoError),

    #[error(transparent)]
    Ch(#[from] ChError),

    #[error(transparent)]
    Stencil(#[from] StencilError),

    #[error(transparent)]
    Weno(#[from] WenoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// 8th-order d2/dx2 of sin(x) with a non-periodic frame.
    DemoX,
    /// Second derivative through a function stencil.
    DemoXFun,
    /// Mixed derivative d4/dx2dy2 on a periodic grid.
    DemoXy,
    /// WENO5 advection operator against the analytic value.
    WenoDemo,
    /// Cahn-Hilliard run writing t,s,k1_inv diagnostics.
    ChRun,
    /// Serial versus parallel Cahn-Hilliard timing.
    ChBench,
}

#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Flags {
    /// key=value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Domain length in x (default 2 pi)
    #[arg(long)]
    pub lx: Option<f64>,
    /// Domain length in y (default 2 pi)
    #[arg(long)]
    pub ly: Option<f64>,
    /// Final time
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Time step as a multiple of dx
    #[arg(long)]
    pub dt_factor: Option<f64>,
    /// Mobility
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Half-width of the uniform initial noise
    #[arg(long)]
    pub ic_amplitude: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tiles: Option<usize>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Diagnostics cadence in steps
    #[arg(long)]
    pub diag_every: Option<u64>,
    /// Snapshot cadence in steps
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    /// Comma-separated grid sizes for ch-bench
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
}

impl Flags {
    /// Fills every unset field from `base`.
    pub fn or(self, base: Flags) -> Flags {
        Flags {
            config: self.config.or(base.config),
            nx: self.nx.or(base.nx),
            ny: self.ny.or(base.ny),
            lx: self.lx.or(base.lx),
            ly: self.ly.or(base.ly),
            t_final: self.t_final.or(base.t_final),
            dt_factor: self.dt_factor.or(base.dt_factor),
            d: self.d.or(base.d),
            gamma: self.gamma.or(base.gamma),
            seed: self.seed.or(base.seed),
            ic_amplitude: self.ic_amplitude.or(base.ic_amplitude),
            workers: self.workers.or(base.workers),
            tiles: self.tiles.or(base.tiles),
            out: self.out.or(base.out),
            diag_every: self.diag_every.or(base.diag_every),
            snapshot_every: self.snapshot_every.or(base.snapshot_every),
            snapshot_dir: self.snapshot_dir.or(base.snapshot_dir),
            n_list: self.n_list.or(base.n_list),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tilestencil", version, about = "Tiled 2D stencils, Cahn-Hilliard and WENO demos")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Parses `key=value` lines into [`Flags`].
pub fn parse_config(text: &str) -> Result<Flags, CliError> {
    let mut argv = vec![OsString::from("config")];
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", no + 1)))?;
        let key = k.trim();
        if key == "config" {
            return Err(CliError::Config("config files cannot include other files".into()));
        }
        argv.push(format!("--{key}").into());
        argv.push(v.trim().into());
    }
    let cmd = Flags::augment_args(clap::Command::new("config").no_binary_name(false));
    let matches = cmd
        .try_get_matches_from(argv)
        .map_err(|e| CliError::Config(format!("config: {}", e.kind())))?;
    Flags::from_arg_matches(&matches).map_err(|e| CliError::Config(e.to_string()))
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ChParams,
    pub workers: usize,
    pub tiles: usize,
    pub out: Option<PathBuf>,
    pub diag_every: u64,
    pub snapshot_every: Option<u64>,
    pub snapshot_dir: Option<PathBuf>,
    pub n_list: Vec<usize>,
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, CliError> {
        let flags = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                flags.or(parse_config(&text)?)
            }
            None => flags,
        };
        let (dnx, dny, dt_final) = match command {
            Command::DemoX | Command::DemoXFun => (1024, 512, 100.0),
            Command::DemoXy => (256, 256, 100.0),
            Command::WenoDemo => (128, 128, 100.0),
            Command::ChRun => (512, 512, 100.0),
            Command::ChBench => (64, 64, 10.0),
        };
        let nx = flags.nx.unwrap_or(dnx);
        let ny = flags.ny.unwrap_or(flags.nx.map_or(dny, |_| nx));
        let mut params = ChParams::square(nx);
        params.ny = ny;
        params.lx = flags.lx.unwrap_or(TAU);
        params.ly = flags.ly.unwrap_or(TAU);
        params.t_final = flags.t_final.unwrap_or(dt_final);
        params.dt = flags.dt_factor.unwrap_or(0.1) * params.dx();
        params.d = flags.d.unwrap_or(params.d);
        params.gamma = flags.gamma.unwrap_or(params.gamma);
        params.seed = flags.seed.unwrap_or(params.seed);
        params.ic_amplitude = flags.ic_amplitude.unwrap_or(params.ic_amplitude);

        let workers = flags.workers.unwrap_or(1);
        let cfg = Self {
            command,
            params,
            workers,
            tiles: flags.tiles.unwrap_or(workers),
            out: flags.out,
            diag_every: flags.diag_every.unwrap_or(1),
            snapshot_every: flags.snapshot_every,
            snapshot_dir: flags.snapshot_dir,
            n_list: flags.n_list.unwrap_or_else(|| vec![64, 128, 256]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.nx() == 0 || self.ny() == 0 {
            return bad("nx and ny must be positive".into());
        }
        if self.workers == 0 || self.tiles == 0 {
            return bad("workers and tiles must be at least 1".into());
        }
        if self.diag_every == 0 || self.snapshot_every == Some(0) {
            return bad("cadences must be at least 1".into());
        }
        if self.snapshot_every.is_some() != self.snapshot_dir.is_some() {
            return bad("snapshot-every and snapshot-dir must be given together".into());
        }
        if let Some(n) = self.n_list.iter().find(|n| !n.is_power_of_two() || **n < 32) {
            return bad(format!("n-list entry {n} is not a power of two >= 32"));
        }
        match self.command {
            Command::ChRun => self.params.validate()?,
            Command::ChBench => {
                if self.n_list.is_empty() {
                    return bad("n-list is empty".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.params.nx
    }

    pub fn ny(&self) -> usize {
        self.params.ny
    }

    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            sizes: self.n_list.clone(),
            t_final: self.params.t_final,
            dt_factor: self.params.dt / self.params.dx(),
            d: self.params.d,
            gamma: self.params.gamma,
            seed: self.params.seed,
            ic_amplitude: self.params.ic_amplitude,
            parallel_workers: self.workers,
            parallel_tiles: self.tiles,
        }
    }
}

/// Parses arguments (including the program name) into a [`RunConfig`].
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    RunConfig::resolve(cli.command, cli.flags)
        .map_err(|e| Cli::command().error(clap::error::ErrorKind::ValueValidation, e))
}

/// Entry point; returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cfg.out {
        Some(path) => File::create(path)
            .map_err(CliError::from)
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                execute(&cfg, &mut w)?;
                w.flush().map_err(CliError::from)
            }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            execute(&cfg, &mut lock)
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs the selected subcommand, writing its report to `out`.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match cfg.command {
        Command::DemoX => demo_x(cfg, out),
        Command::DemoXFun => demo_x_fun(cfg, out),
        Command::DemoXy => demo_xy(cfg, out),
        Command::WenoDemo => weno_demo(cfg, out),
        Command::ChRun => ch_run(cfg, out),
        Command::ChBench => {
            let report = bench(&cfg.bench_config())?;
            out.write_all(report.to_csv().as_bytes())?;
            Ok(())
        }
    }
}

fn sine_grid(cfg: &RunConfig) -> Result<Grid2D, CliError> {
    let dx = cfg.params.lx / cfg.nx() as f64;
    let dy = cfg.params.ly / cfg.ny() as f64;
    Grid2D::from_fn(cfg.nx(), cfg.ny(), dx, dy, |x, _| x.sin())
        .map_err(|e| CliError::Stencil(e.into()))
}

/// Prints row 0 of an x-derivative demo; the first and last `frame` cells
/// keep the sentinel value they had before the stencil ran.
fn report_x(
    out: &mut dyn Write,
    title: &str,
    plan: &StencilPlan,
    frame: usize,
    sentinel: f64,
) -> Result<(), CliError> {
    let g = plan.output();
    let nx = g.nx();
    writeln!(out, "# {title}")?;
    writeln!(out, "i,x,computed,expected")?;
    let mut max_err = 0.0f64;
    let mut untouched = (0, 0);
    for i in 0..nx {
        let x = i as f64 * g.dx();
        let c = g.get(i, 0);
        let interior = i >= frame && i < nx - frame;
        if interior {
            max_err = max_err.max((c + x.sin()).abs());
            writeln!(out, "{i},{x:.6},{c:.12e},{:.12e}", -x.sin())?;
        } else {
            if c == sentinel {
                if i < frame {
                    untouched.0 += 1;
                } else {
                    untouched.1 += 1;
                }
            }
            writeln!(out, "{i},{x:.6},{c:.12e},untouched")?;
        }
    }
    writeln!(out, "# max interior error {max_err:.3e}")?;
    writeln!(
        out,
        "# untouched cells: {} left, {} right",
        untouched.0, untouched.1
    )?;
    Ok(())
}

const SENTINEL: f64 = -999.0;

fn demo_x(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let input = sine_grid(cfg)?;
    let mut output = input.zeros_like();
    output.fill(SENTINEL);
    let stencil = operators::eighth_order_second_derivative_x(input.dx());
    let mut plan = StencilPlan::create(
        Direction::X,
        BoundaryMode::NonPeriodic,
        stencil.into(),
        input,
        output,
        cfg.tiles,
        cfg.workers,
    )?;
    plan.compute(Residency::Host);
    report_x(out, "8th-order d2/dx2 of sin(x), non-periodic", &plan, 4, SENTINEL)
}

fn demo_x_fun(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let input = sine_grid(cfg)?;
    let mut output = input.zeros_like();
    output.fill(SENTINEL);
    let h2 = input.dx() * input.dx();
    let stencil = FunctionStencil::new(Extents::x(1, 1), vec![1.0 / h2], |w, coe, _| {
        coe[0] * (w[0] - 2.0 * w[1] + w[2])
    });
    let mut plan = StencilPlan::create(
        Direction::X,
        BoundaryMode::NonPeriodic,
        stencil.into(),
        input,
        output,
        cfg.tiles,
        cfg.workers,
    )?;
    plan.compute(Residency::Host);
    report_x(out, "function-stencil d2/dx2 of sin(x), non-periodic", &plan, 1, SENTINEL)
}

fn demo_xy(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let dx = cfg.params.lx / cfg.nx() as f64;
    let dy = cfg.params.ly / cfg.ny() as f64;
    let input = Grid2D::from_fn(cfg.nx(), cfg.ny(), dx, dy, |x, y| x.sin() * y.sin())
        .map_err(|e| CliError::Stencil(e.into()))?;
    let output = input.zeros_like();
    let mut plan = StencilPlan::create(
        Direction::XY,
        BoundaryMode::Periodic,
        operators::cross_xxyy(dx, dy).into(),
        input,
        output,
        cfg.tiles,
        cfg.workers,
    )?;
    plan.compute(Residency::Host);
    let (inp, res) = plan.destroy();
    let max_err = res
        .values()
        .iter()
        .zip(inp.values())
        .fold(0.0f64, |m, (c, e)| m.max((c - e).abs()));
    writeln!(out, "# d4/dx2dy2 of sin(x)sin(y), periodic, {}x{}", cfg.nx(), cfg.ny())?;
    writeln!(out, "# expected sin(x)sin(y); max error {max_err:.3e}")?;
    Ok(())
}

fn weno_demo(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let (u, v) = (1.0, -0.5);
    let dx = cfg.params.lx / cfg.nx() as f64;
    let dy = cfg.params.ly / cfg.ny() as f64;
    let grid = |f: &dyn Fn(f64, f64) -> f64| {
        Grid2D::from_fn(cfg.nx(), cfg.ny(), dx, dy, f).map_err(WenoError::from)
    };
    let phi = grid(&|x, y| x.sin() * y.cos())?;
    let expected = grid(&|x, y| -(u * x.cos() * y.cos() - v * x.sin() * y.sin()))?;
    let vel = VelocityField::uniform(&phi, u, v);
    let mut res = phi.zeros_like();
    let tiles = crate::grid::make_tiles(cfg.ny(), cfg.tiles, Extents::square(3))
        .map_err(WenoError::from)?;
    let workers = Workers::new(cfg.workers).map_err(WenoError::from)?;
    weno_advect_into(&phi, &vel, &mut res, &tiles, &workers)?;
    let max_err = res
        .values()
        .iter()
        .zip(expected.values())
        .fold(0.0f64, |m, (c, e)| m.max((c - e).abs()));
    writeln!(
        out,
        "# -(u phi_x + v phi_y) for phi = sin(x)cos(y), u = {u}, v = {v}, {}x{}",
        cfg.nx(),
        cfg.ny()
    )?;
    writeln!(out, "# max error {max_err:.3e}")?;
    Ok(())
}

/// Streams diagnostics rows and writes snapshot files.
struct CsvSink<'a> {
    out: &'a mut dyn Write,
    snapshot_dir: Option<&'a Path>,
}

impl ChSink for CsvSink<'_> {
    fn diagnostics(&mut self, d: &Diagnostics) -> Result<(), ChError> {
        writeln!(self.out, "{}", diagnostics_row(d)).map_err(IoError::from)?;
        Ok(())
    }

    fn snapshot(&mut self, step: u64, c: &Grid2D) -> Result<(), ChError> {
        if let Some(dir) = self.snapshot_dir {
            let path = dir.join(format!("snap_{step:08}.csg"));
            let mut w = BufWriter::new(File::create(path).map_err(IoError::from)?);
            write_snapshot(c, &mut w)?;
            w.flush().map_err(IoError::from)?;
        }
        Ok(())
    }
}

fn ch_run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(dir) = &cfg.snapshot_dir {
        fs::create_dir_all(dir)?;
    }
    let opts = RunOptions {
        diag_every: cfg.diag_every,
        snapshot_every: cfg.snapshot_every,
        exec: ExecConfig::new(cfg.tiles.min(cfg.ny()), cfg.workers),
    };
    write_diagnostics_header(&mut *out)?;
    let mut sink = CsvSink {
        out,
        snapshot_dir: cfg.snapshot_dir.as_deref(),
    };
    run(&cfg.params, &opts, &mut sink)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, clap::Error> {
        parse_args(std::iter::once("tilestencil").chain(args.iter().copied()))
    }

    #[test]
    fn subcommands_parse() {
        for (s, c) in [
            ("demo-x", Command::DemoX),
            ("demo-x-fun", Command::DemoXFun),
            ("demo-xy", Command::DemoXy),
            ("weno-demo", Command::WenoDemo),
            ("ch-run", Command::ChRun),
            ("ch-bench", Command::ChBench),
        ] {
            assert_eq!(parse(&[s]).unwrap().command, c);
        }
        assert!(parse(&[]).is_err());
        assert!(parse(&["demo-z"]).is_err());
        assert!(parse(&["demo-x", "--bogus", "1"]).is_err());
    }

    #[test]
    fn long_form_flags() {
        let cfg = parse(&[
            "ch-run", "--nx", "512", "--ny", "512", "--T", "100", "--dt-factor", "0.1", "--D",
            "1.0", "--gamma", "0.01", "--seed", "1",
        ])
        .unwrap();
        assert_eq!(cfg.params, ChParams::square(512));
    }

    #[test]
    fn config_file_and_override() {
        let f = parse_config("# comment\nnx = 64\ngamma=0.02 # trailing\n\nn-list=32,64\n").unwrap();
        assert_eq!(f.nx, Some(64));
        assert_eq!(f.gamma, Some(0.02));
        assert_eq!(f.n_list, Some(vec![32, 64]));
        let flags = Flags {
            nx: Some(32),
            ..Flags::default()
        };
        let merged = flags.or(f);
        assert_eq!(merged.nx, Some(32));
        assert_eq!(merged.gamma, Some(0.02));
        assert!(parse_config("nx").is_err());
        assert!(parse_config("colour=blue").is_err());
        assert!(parse_config("nx=abc").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse(&["ch-run", "--nx", "100"]).is_err());
        assert!(parse(&["ch-bench", "--n-list", "64,48"]).is_err());
        assert!(parse(&["ch-bench", "--n-list", "16"]).is_err());
        assert!(parse(&["ch-run", "--diag-every", "0"]).is_err());
        assert!(parse(&["demo-x", "--workers", "0"]).is_err());
        assert!(parse(&["ch-run", "--snapshot-every", "2"]).is_err());
    }

    #[test]
    fn demo_x_reports_frame() {
        let cfg = parse(&["demo-x", "--nx", "64", "--ny", "4", "--tiles", "2"]).unwrap();
        let mut buf = Vec::new();
        execute(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# untouched cells: 4 left, 4 right"));
        assert_eq!(text.matches(",untouched").count(), 8);
    }
}
