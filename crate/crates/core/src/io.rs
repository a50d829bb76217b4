//! Snapshot and diagnostics file formats.
//!
//! Snapshots use the `CSG1` layout: the four magic bytes, then
//! little-endian `u32 nx`, `u32 ny`, `f64 dx`, `f64 dy`, then `nx * ny`
//! little-endian `f64` values in row-major order, with no padding.
//!
//! Diagnostics are CSV with header `t,s,k1_inv`, LF line endings and
//! 17 significant digits per value.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::cahn_hilliard::Diagnostics;
use crate::grid::{Grid2D, GridError};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"CSG1";
pub const DIAGNOSTICS_HEADER: &str = "t,s,k1_inv";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("not a CSG1 snapshot (magic {0:?})")]
    BadMagic([u8; 4]),

    #[error("grid dimensions {nx}x{ny} do not fit the snapshot format")]
    TooLarge { nx: usize, ny: usize },

    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Serializes `grid` as a `CSG1` snapshot.
pub fn write_snapshot<W: Write>(grid: &Grid2D, mut w: W) -> Result<(), IoError> {
    let nx = u32::try_from(grid.nx()).map_err(|_| IoError::TooLarge {
        nx: grid.nx(),
        ny: grid.ny(),
    })?;
    let ny = u32::try_from(grid.ny()).map_err(|_| IoError::TooLarge {
        nx: grid.nx(),
        ny: grid.ny(),
    })?;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&nx.to_le_bytes())?;
    w.write_all(&ny.to_le_bytes())?;
    w.write_all(&grid.dx().to_le_bytes())?;
    w.write_all(&grid.dy().to_le_bytes())?;
    for v in grid.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Grid2D, IoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(IoError::BadMagic(magic));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let nx = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let ny = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let dx = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let dy = f64::from_le_bytes(b8);
    let mut values = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(Grid2D::from_values(nx, ny, dx, dy, values)?)
}

/// Writes a snapshot file.
pub fn emit_snapshot(grid: &Grid2D, path: impl AsRef<Path>) -> Result<(), IoError> {
    write_snapshot(grid, BufWriter::new(File::create(path)?))
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Grid2D, IoError> {
    read_snapshot(BufReader::new(File::open(path)?))
}

/// Formats a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_row(d: &Diagnostics) -> String {
    format!("{},{},{}", format_f64(d.t), format_f64(d.s), format_f64(d.k1_inv))
}

pub fn write_diagnostics_header<W: Write>(mut w: W) -> io::Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")
}

pub fn write_diagnostics<W: Write>(rows: &[Diagnostics], mut w: W) -> io::Result<()> {
    write_diagnostics_header(&mut w)?;
    for d in rows {
        writeln!(w, "{}", diagnostics_row(d))?;
    }
    w.flush()
}

/// Writes a diagnostics CSV file.
pub fn emit_diagnostics(rows: &[Diagnostics], path: impl AsRef<Path>) -> Result<(), IoError> {
    write_diagnostics(rows, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Parses a diagnostics CSV produced by [`write_diagnostics`].
pub fn read_diagnostics<R: Read>(r: R) -> Result<Vec<Diagnostics>, IoError> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(DIAGNOSTICS_HEADER) => {}
        other => {
            return Err(IoError::Io(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("unexpected diagnostics header {other:?}"),
            )))
        }
    }
    lines
        .map(|line| {
            let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("bad row {line:?}"));
            let mut it = line.split(',').map(|f| f.parse::<f64>());
            let mut next = || it.next().and_then(Result::ok).ok_or_else(bad);
            Ok(Diagnostics {
                t: next()?,
                s: next()?,
                k1_inv: next()?,
            })
        })
        .collect()
}
