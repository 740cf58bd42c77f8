//! Field snapshots: a binary header (dimension, extents, origin, spacing,
//! boundary, scalar tag) followed by row-major little-endian 64-bit floats,
//! plus a two/three-column text export for plotting.

use crate::lattice::{Boundary, Field, Grid, Scalar};
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"GPS1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a field snapshot (bad magic)")]
    BadMagic,
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
}

/// Tag stored in the header; classical measures reuse the field layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    RealField,
    ComplexField,
    Measure,
}

impl SnapshotKind {
    fn to_byte(self) -> u8 {
        match self {
            SnapshotKind::RealField => 0,
            SnapshotKind::ComplexField => 1,
            SnapshotKind::Measure => 2,
        }
    }
    fn from_byte(b: u8) -> Result<Self, SnapshotError> {
        match b {
            0 => Ok(SnapshotKind::RealField),
            1 => Ok(SnapshotKind::ComplexField),
            2 => Ok(SnapshotKind::Measure),
            _ => Err(SnapshotError::Corrupt(format!("unknown scalar tag {b}"))),
        }
    }
}

fn write_header<W: Write>(w: &mut W, grid: &Grid, kind: SnapshotKind) -> Result<(), SnapshotError> {
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    let bc: u8 = match grid.boundary() {
        Boundary::Dirichlet => 0,
        Boundary::Neumann => 1,
    };
    w.write_all(&[bc, kind.to_byte()])?;
    for axis in 0..2 {
        w.write_all(&grid.extents()[axis].to_le_bytes())?;
        w.write_all(&grid.origin()[axis].to_le_bytes())?;
    }
    w.write_all(&grid.spacing().to_le_bytes())?;
    for axis in 0..2 {
        w.write_all(&(grid.shape()[axis] as u64).to_le_bytes())?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<(Grid, SnapshotKind), SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let boundary = match b2[0] {
        0 => Boundary::Dirichlet,
        1 => Boundary::Neumann,
        other => return Err(SnapshotError::Corrupt(format!("unknown boundary tag {other}"))),
    };
    let kind = SnapshotKind::from_byte(b2[1])?;
    let mut f8 = [0u8; 8];
    let mut extents = [0.0f64; 2];
    let mut origin = [0.0f64; 2];
    for axis in 0..2 {
        r.read_exact(&mut f8)?;
        extents[axis] = f64::from_le_bytes(f8);
        r.read_exact(&mut f8)?;
        origin[axis] = f64::from_le_bytes(f8);
    }
    r.read_exact(&mut f8)?;
    let spacing = f64::from_le_bytes(f8);
    let mut shape = [0usize; 2];
    for axis in 0..2 {
        r.read_exact(&mut f8)?;
        shape[axis] = u64::from_le_bytes(f8) as usize;
    }
    let grid = match dim {
        1 => Grid::line(extents[0], spacing, boundary)?,
        2 => Grid::rect(extents, spacing, boundary)?,
        other => return Err(SnapshotError::Corrupt(format!("dimension {other}"))),
    }
    .with_origin(origin);
    if grid.shape() != shape {
        return Err(SnapshotError::Corrupt("shape disagrees with extents/spacing".into()));
    }
    Ok((grid, kind))
}

pub fn write_field(path: &Path, field: &Field) -> Result<(), SnapshotError> {
    let kind = match field.scalar() {
        Scalar::Real => SnapshotKind::RealField,
        Scalar::Complex => SnapshotKind::ComplexField,
    };
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, field.grid(), kind)?;
    match kind {
        SnapshotKind::ComplexField => {
            for v in field.values() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        _ => {
            for v in field.values() {
                w.write_all(&v.re.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let (grid, kind) = read_header(&mut r)?;
    let n = grid.len();
    let mut f8 = [0u8; 8];
    match kind {
        SnapshotKind::ComplexField => {
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut f8)?;
                let re = f64::from_le_bytes(f8);
                r.read_exact(&mut f8)?;
                let im = f64::from_le_bytes(f8);
                vals.push(Complex64::new(re, im));
            }
            Ok(Field::from_complex(grid, vals)?)
        }
        _ => {
            let mut vals = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut f8)?;
                vals.push(f64::from_le_bytes(f8));
            }
            Ok(Field::from_real(grid, vals)?)
        }
    }
}

/// Measure weights in the field layout with the measure tag.
pub fn write_measure(path: &Path, grid: &Grid, weights: &[f64]) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, grid, SnapshotKind::Measure)?;
    for v in weights {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measure(path: &Path) -> Result<(Grid, Vec<f64>), SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let (grid, kind) = read_header(&mut r)?;
    if kind != SnapshotKind::Measure {
        return Err(SnapshotError::Corrupt("expected a measure snapshot".into()));
    }
    let mut f8 = [0u8; 8];
    let mut vals = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut f8)?;
        vals.push(f64::from_le_bytes(f8));
    }
    Ok((grid, vals))
}

/// Plot-ready text: `x value` (real 1D), `x re im` (complex 1D),
/// `x y value` / `x y re im` in 2D. Full float precision, LF endings.
pub fn write_field_text(path: &Path, field: &Field) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    let grid = field.grid();
    for (i, v) in field.values().iter().enumerate() {
        let c = grid.coord(i);
        match (grid.dim(), field.scalar()) {
            (1, Scalar::Real) => writeln!(w, "{} {}", c[0], v.re)?,
            (1, Scalar::Complex) => writeln!(w, "{} {} {}", c[0], v.re, v.im)?,
            (_, Scalar::Real) => writeln!(w, "{} {} {}", c[0], c[1], v.re)?,
            (_, Scalar::Complex) => writeln!(w, "{} {} {} {}", c[0], c[1], v.re, v.im)?,
        }
    }
    w.flush()?;
    Ok(())
}
