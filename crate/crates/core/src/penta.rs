//! Batched pentadiagonal solves in interleaved layout.
//!
//! A batch holds `batch_count` independent systems of `n` unknowns. Entry
//! `(system b, row r)` of every diagonal and right-hand side lives at
//! `r * batch_count + b`, so one row of all systems is contiguous.
//!
//! Non-periodic systems are solved by LU elimination without pivoting.
//! Periodic systems add wrap-around couplings in rows `0, 1, n-2, n-1`; they
//! are handled as a rank-4 update of the banded core via the Woodbury
//! identity, with the four auxiliary core solves done once per
//! factorization.

use ndarray::{ArrayViewMut2, Axis as NdAxis};
use ndarray::parallel::prelude::*;
use thiserror::Error;

use crate::grid::{transpose_into, Grid2D, GridError};
use crate::workers::Workers;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PentaError {
    #[error("pentadiagonal systems need at least 5 unknowns, got {0}")]
    TooSmall(usize),

    #[error("batch must contain at least one system")]
    EmptyBatch,

    #[error("expected a batch of {expected_batch} x {expected_n}, got {batch} x {n}")]
    ShapeMismatch {
        expected_batch: usize,
        expected_n: usize,
        batch: usize,
        n: usize,
    },

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("zero pivot in system {system} at row {row}")]
    ZeroPivot { system: usize, row: usize },

    #[error("singular corner correction in system {system}")]
    SingularCapacitance { system: usize },

    #[error("operator periodicity is {actual}, this solver needs {expected}")]
    Periodicity { expected: bool, actual: bool },

    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Five diagonals of a batch of pentadiagonal systems.
///
/// Row `r` of a system reads
/// `second_sub[r] x[r-2] + sub[r] x[r-1] + main[r] x[r] + sup[r] x[r+1] + second_sup[r] x[r+2]`.
/// Without `periodic`, terms whose column falls outside `[0, n)` are
/// ignored; with it, the column wraps.
#[derive(Debug, Clone, PartialEq)]
pub struct PentaBatch {
    batch_count: usize,
    n: usize,
    periodic: bool,
    second_sub: Vec<f64>,
    sub: Vec<f64>,
    main: Vec<f64>,
    sup: Vec<f64>,
    second_sup: Vec<f64>,
}

impl PentaBatch {
    /// All-zero batch.
    pub fn new(batch_count: usize, n: usize, periodic: bool) -> Result<Self, PentaError> {
        if n < 5 {
            return Err(PentaError::TooSmall(n));
        }
        if batch_count == 0 {
            return Err(PentaError::EmptyBatch);
        }
        let len = batch_count * n;
        Ok(Self {
            batch_count,
            n,
            periodic,
            second_sub: vec![0.0; len],
            sub: vec![0.0; len],
            main: vec![0.0; len],
            sup: vec![0.0; len],
            second_sup: vec![0.0; len],
        })
    }

    pub fn batch_count(&self) -> usize {
        self.batch_count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    #[inline]
    fn idx(&self, system: usize, row: usize) -> usize {
        row * self.batch_count + system
    }

    /// Sets row `row` of system `system` to `[second_sub, sub, main, sup, second_sup]`.
    pub fn set_row(&mut self, system: usize, row: usize, coeffs: [f64; 5]) {
        let k = self.idx(system, row);
        self.second_sub[k] = coeffs[0];
        self.sub[k] = coeffs[1];
        self.main[k] = coeffs[2];
        self.sup[k] = coeffs[3];
        self.second_sup[k] = coeffs[4];
    }

    pub fn row(&self, system: usize, row: usize) -> [f64; 5] {
        let k = self.idx(system, row);
        [
            self.second_sub[k],
            self.sub[k],
            self.main[k],
            self.sup[k],
            self.second_sup[k],
        ]
    }

    /// Computes `A x` for every system.
    pub fn apply(&self, x: &RhsBatch) -> Result<RhsBatch, PentaError> {
        self.check_rhs(x)?;
        let (bc, n) = (self.batch_count, self.n);
        let mut y = RhsBatch::zeros(bc, n)?;
        for b in 0..bc {
            for r in 0..n {
                let coeffs = self.row(b, r);
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate() {
                    let col = r as isize + k as isize - 2;
                    let col = if (0..n as isize).contains(&col) {
                        col as usize
                    } else if self.periodic {
                        col.rem_euclid(n as isize) as usize
                    } else {
                        continue;
                    };
                    acc += c * x.values[col * bc + b];
                }
                y.values[r * bc + b] = acc;
            }
        }
        Ok(y)
    }

    fn check_rhs(&self, rhs: &RhsBatch) -> Result<(), PentaError> {
        if rhs.batch_count != self.batch_count || rhs.n != self.n {
            return Err(PentaError::ShapeMismatch {
                expected_batch: self.batch_count,
                expected_n: self.n,
                batch: rhs.batch_count,
                n: rhs.n,
            });
        }
        Ok(())
    }

    /// Factorizes every system. Periodic batches also precompute the
    /// corner correction.
    pub fn factorize(&self) -> Result<PentaFactor, PentaError> {
        let (bc, n) = (self.batch_count, self.n);
        let len = bc * n;
        let mut f = PentaFactor {
            batch_count: bc,
            n,
            second_sub: vec![0.0; len],
            gamma: vec![0.0; len],
            mu: vec![0.0; len],
            alpha: vec![0.0; len],
            beta: vec![0.0; len],
            corners: None,
        };
        for b in 0..bc {
            for r in 0..n {
                let k = r * bc + b;
                let a = if r >= 2 { self.second_sub[k] } else { 0.0 };
                let mut gamma = if r >= 1 { self.sub[k] } else { 0.0 };
                if r >= 2 {
                    gamma -= a * f.alpha[k - 2 * bc];
                }
                let mut mu = self.main[k];
                if r >= 1 {
                    mu -= gamma * f.alpha[k - bc];
                }
                if r >= 2 {
                    mu -= a * f.beta[k - 2 * bc];
                }
                if mu == 0.0 || !mu.is_finite() {
                    return Err(PentaError::ZeroPivot { system: b, row: r });
                }
                let mut alpha = 0.0;
                if r + 1 < n {
                    alpha = self.sup[k];
                    if r >= 1 {
                        alpha -= gamma * f.beta[k - bc];
                    }
                    alpha /= mu;
                }
                let beta = if r + 2 < n {
                    self.second_sup[k] / mu
                } else {
                    0.0
                };
                f.second_sub[k] = a;
                f.gamma[k] = gamma;
                f.mu[k] = mu;
                f.alpha[k] = alpha;
                f.beta[k] = beta;
            }
        }
        if self.periodic {
            f.corners = Some(CornerCorrection::build(self, &f)?);
        }
        Ok(f)
    }
}

/// Right-hand sides (or solutions) in the interleaved layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBatch {
    batch_count: usize,
    n: usize,
    values: Vec<f64>,
}

impl RhsBatch {
    pub fn zeros(batch_count: usize, n: usize) -> Result<Self, PentaError> {
        Self::from_values(batch_count, n, vec![0.0; batch_count * n])
    }

    pub fn from_values(batch_count: usize, n: usize, values: Vec<f64>) -> Result<Self, PentaError> {
        if batch_count == 0 {
            return Err(PentaError::EmptyBatch);
        }
        if values.len() != batch_count * n {
            return Err(PentaError::LengthMismatch {
                expected: batch_count * n,
                actual: values.len(),
            });
        }
        Ok(Self {
            batch_count,
            n,
            values,
        })
    }

    pub fn batch_count(&self) -> usize {
        self.batch_count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, system: usize, row: usize) -> f64 {
        self.values[row * self.batch_count + system]
    }

    pub fn set(&mut self, system: usize, row: usize, value: f64) {
        self.values[row * self.batch_count + system] = value;
    }
}

/// LU factors of a batch, plus the Woodbury data for periodic batches.
#[derive(Debug, Clone)]
pub struct PentaFactor {
    batch_count: usize,
    n: usize,
    second_sub: Vec<f64>,
    gamma: Vec<f64>,
    mu: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    corners: Option<CornerCorrection>,
}

#[derive(Debug, Clone)]
struct CornerCorrection {
    /// Core solutions for unit vectors at rows 0, 1, n-2, n-1.
    z: [Vec<f64>; 4],
    /// Per-system inverse of the 4x4 capacitance matrix, row-major.
    cap_inv: Vec<[f64; 16]>,
    /// Per-system corner entries: row 0 (cols n-2, n-1), row 1 (col n-1),
    /// row n-2 (col 0), row n-1 (cols 0, 1).
    coupling: Vec<[f64; 6]>,
}

impl CornerCorrection {
    fn build(m: &PentaBatch, f: &PentaFactor) -> Result<Self, PentaError> {
        let (bc, n) = (m.batch_count, m.n);
        let unit_rows = [0, 1, n - 2, n - 1];
        let z = unit_rows.map(|row| {
            let mut e = vec![0.0; bc * n];
            e[row * bc..(row + 1) * bc].fill(1.0);
            let mut view = ArrayViewMut2::from_shape((n, bc), &mut e[..]).expect("shape");
            f.core_solve(&mut view, 0);
            e
        });
        let mut coupling = Vec::with_capacity(bc);
        let mut cap_inv = Vec::with_capacity(bc);
        for b in 0..bc {
            let c = [
                m.second_sub[b],
                m.sub[b],
                m.second_sub[bc + b],
                m.second_sup[(n - 2) * bc + b],
                m.sup[(n - 1) * bc + b],
                m.second_sup[(n - 1) * bc + b],
            ];
            let mut cap = [0.0; 16];
            for (col, zc) in z.iter().enumerate() {
                let t = project(&c, |r| zc[r * bc + b], n);
                for (row, tv) in t.iter().enumerate() {
                    cap[row * 4 + col] = tv + if row == col { 1.0 } else { 0.0 };
                }
            }
            let inv = invert4(&cap).ok_or(PentaError::SingularCapacitance { system: b })?;
            coupling.push(c);
            cap_inv.push(inv);
        }
        Ok(Self {
            z,
            cap_inv,
            coupling,
        })
    }
}

/// Applies the corner rows `V^T` to a vector given by `at(row)`.
#[inline]
fn project(c: &[f64; 6], at: impl Fn(usize) -> f64, n: usize) -> [f64; 4] {
    [
        c[0] * at(n - 2) + c[1] * at(n - 1),
        c[2] * at(n - 1),
        c[3] * at(0),
        c[4] * at(0) + c[5] * at(1),
    ]
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert4(m: &[f64; 16]) -> Option<[f64; 16]> {
    let mut a = [[0.0f64; 8]; 4];
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for r in 0..4 {
        a[r][..4].copy_from_slice(&m[r * 4..r * 4 + 4]);
        a[r][4 + r] = 1.0;
    }
    for c in 0..4 {
        let p = (c..4).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if !(a[p][c].abs() > 1e-14 * scale) {
            return None;
        }
        a.swap(c, p);
        let piv = a[c][c];
        for v in a[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..4 {
            if r != c {
                let f = a[r][c];
                let pivot_row = a[c];
                for (v, pv) in a[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    let mut inv = [0.0; 16];
    for r in 0..4 {
        inv[r * 4..r * 4 + 4].copy_from_slice(&a[r][4..]);
    }
    Some(inv)
}

impl PentaFactor {
    pub fn batch_count(&self) -> usize {
        self.batch_count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_periodic(&self) -> bool {
        self.corners.is_some()
    }

    /// Solves in place, spreading systems over `workers`.
    pub fn solve(&self, rhs: &mut RhsBatch, workers: &Workers) -> Result<(), PentaError> {
        if rhs.batch_count != self.batch_count || rhs.n != self.n {
            return Err(PentaError::ShapeMismatch {
                expected_batch: self.batch_count,
                expected_n: self.n,
                batch: rhs.batch_count,
                n: rhs.n,
            });
        }
        self.solve_slice(&mut rhs.values, workers);
        Ok(())
    }

    /// Solves an interleaved buffer of length `batch_count * n` in place.
    pub(crate) fn solve_slice(&self, values: &mut [f64], workers: &Workers) {
        let bc = self.batch_count;
        let mut view = ArrayViewMut2::from_shape((self.n, bc), values).expect("interleaved shape");
        let chunk = bc.div_ceil(workers.count()).max(1);
        if workers.count() <= 1 {
            self.solve_chunk(&mut view, 0);
        } else {
            workers.install(|| {
                view.axis_chunks_iter_mut(NdAxis(1), chunk)
                    .into_par_iter()
                    .enumerate()
                    .for_each(|(k, mut part)| self.solve_chunk(&mut part, k * chunk));
            });
        }
    }

    fn solve_chunk(&self, part: &mut ArrayViewMut2<'_, f64>, b0: usize) {
        self.core_solve(part, b0);
        if let Some(corners) = &self.corners {
            self.correct(corners, part, b0);
        }
    }

    /// Forward and back substitution with the banded core for systems
    /// `b0..b0 + part.ncols()`.
    fn core_solve(&self, part: &mut ArrayViewMut2<'_, f64>, b0: usize) {
        let (n, bc) = (self.n, self.batch_count);
        let width = part.ncols();
        let coef = |r: usize| r * bc + b0..r * bc + b0 + width;
        for r in 0..n {
            let (done, mut rest) = part.view_mut().split_at(NdAxis(0), r);
            let mut row = rest.row_mut(0);
            let cur = row.as_slice_mut().expect("rows are contiguous");
            let range = coef(r);
            let mu = &self.mu[range.clone()];
            if r >= 2 {
                let ss = &self.second_sub[range.clone()];
                let g = &self.gamma[range];
                let p2 = done.row(r - 2);
                let p1 = done.row(r - 1);
                let (p2, p1) = (p2.as_slice().expect("contiguous"), p1.as_slice().expect("contiguous"));
                for c in 0..width {
                    let mut z = cur[c];
                    z -= ss[c] * p2[c];
                    z -= g[c] * p1[c];
                    cur[c] = z / mu[c];
                }
            } else if r == 1 {
                let g = &self.gamma[range];
                let p1 = done.row(0);
                let p1 = p1.as_slice().expect("contiguous");
                for c in 0..width {
                    let mut z = cur[c];
                    z -= g[c] * p1[c];
                    cur[c] = z / mu[c];
                }
            } else {
                for c in 0..width {
                    cur[c] /= mu[c];
                }
            }
        }
        for r in (0..n.saturating_sub(1)).rev() {
            let (mut head, tail) = part.view_mut().split_at(NdAxis(0), r + 1);
            let mut row = head.row_mut(r);
            let cur = row.as_slice_mut().expect("rows are contiguous");
            let range = coef(r);
            let alpha = &self.alpha[range.clone()];
            let n1 = tail.row(0);
            let n1 = n1.as_slice().expect("contiguous");
            if r + 2 < n {
                let beta = &self.beta[range];
                let n2 = tail.row(1);
                let n2 = n2.as_slice().expect("contiguous");
                for c in 0..width {
                    let mut x = cur[c] - alpha[c] * n1[c];
                    x -= beta[c] * n2[c];
                    cur[c] = x;
                }
            } else {
                for c in 0..width {
                    cur[c] -= alpha[c] * n1[c];
                }
            }
        }
    }

    fn correct(&self, corners: &CornerCorrection, part: &mut ArrayViewMut2<'_, f64>, b0: usize) {
        let (n, bc) = (self.n, self.batch_count);
        for c in 0..part.ncols() {
            let b = b0 + c;
            let t = project(&corners.coupling[b], |r| part[[r, c]], n);
            let inv = &corners.cap_inv[b];
            let mut s = [0.0; 4];
            for (k, sk) in s.iter_mut().enumerate() {
                *sk = inv[k * 4] * t[0]
                    + inv[k * 4 + 1] * t[1]
                    + inv[k * 4 + 2] * t[2]
                    + inv[k * 4 + 3] * t[3];
            }
            for r in 0..n {
                let k = r * bc + b;
                let corr = corners.z[0][k] * s[0]
                    + corners.z[1][k] * s[1]
                    + corners.z[2][k] * s[2]
                    + corners.z[3][k] * s[3];
                part[[r, c]] -= corr;
            }
        }
    }
}

/// Solves a non-periodic batch, returning the solution.
pub fn solve_batch(m: &PentaBatch, rhs: &RhsBatch) -> Result<RhsBatch, PentaError> {
    if m.periodic {
        return Err(PentaError::Periodicity {
            expected: false,
            actual: true,
        });
    }
    let mut x = rhs.clone();
    m.factorize()?.solve(&mut x, &Workers::serial())?;
    Ok(x)
}

/// Solves a cyclic (periodic) batch, returning the solution.
pub fn solve_periodic_batch(m: &PentaBatch, rhs: &RhsBatch) -> Result<RhsBatch, PentaError> {
    if !m.periodic {
        return Err(PentaError::Periodicity {
            expected: true,
            actual: false,
        });
    }
    let mut x = rhs.clone();
    m.factorize()?.solve(&mut x, &Workers::serial())?;
    Ok(x)
}

/// Discretized `I + sigma * d4/dx4`: every row is
/// `[sigma, -4 sigma, 1 + 6 sigma, -4 sigma, sigma]`.
pub fn build_hyperdiffusion_operator(
    sigma: f64,
    n: usize,
    batch_count: usize,
    periodic: bool,
) -> Result<PentaBatch, PentaError> {
    let mut m = PentaBatch::new(batch_count, n, periodic)?;
    m.second_sub.fill(sigma);
    m.sub.fill(-4.0 * sigma);
    m.main.fill(1.0 + 6.0 * sigma);
    m.sup.fill(-4.0 * sigma);
    m.second_sup.fill(sigma);
    Ok(m)
}

/// Which grid direction the systems run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// One system per row: `ny` systems of `nx` unknowns.
    X,
    /// One system per column: `nx` systems of `ny` unknowns.
    Y,
}

/// Packs a grid into interleaved systems along `axis`.
pub fn interleave(g: &Grid2D, axis: Axis) -> RhsBatch {
    let (nx, ny) = (g.nx(), g.ny());
    let mut values = vec![0.0; nx * ny];
    interleave_into(g, axis, &mut values);
    let (batch_count, n) = match axis {
        Axis::X => (ny, nx),
        Axis::Y => (nx, ny),
    };
    RhsBatch {
        batch_count,
        n,
        values,
    }
}

pub(crate) fn interleave_into(g: &Grid2D, axis: Axis, dst: &mut [f64]) {
    match axis {
        Axis::X => transpose_into(g.values(), g.nx(), g.ny(), dst),
        Axis::Y => dst.copy_from_slice(g.values()),
    }
}

pub(crate) fn deinterleave_into(src: &[f64], axis: Axis, g: &mut Grid2D) {
    let (nx, ny) = (g.nx(), g.ny());
    match axis {
        Axis::X => transpose_into(src, ny, nx, g.values_mut()),
        Axis::Y => g.values_mut().copy_from_slice(src),
    }
}

/// Inverse of [`interleave`]; `dx`, `dy` become the grid spacing.
pub fn deinterleave(batch: &RhsBatch, axis: Axis, dx: f64, dy: f64) -> Result<Grid2D, PentaError> {
    let (nx, ny) = match axis {
        Axis::X => (batch.n, batch.batch_count),
        Axis::Y => (batch.batch_count, batch.n),
    };
    let mut g = Grid2D::new(nx, ny, dx, dy)?;
    deinterleave_into(&batch.values, axis, &mut g);
    Ok(g)
}
