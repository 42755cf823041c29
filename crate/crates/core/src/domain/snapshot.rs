//! Binary field snapshots: `ADJS`, format version, axis count, dims, spacing,
//! then little-endian `f64` values in row-major order.

use std::io::{Read, Write};
use std::sync::Arc;

use super::field::ScalarField;
use super::grid::Grid;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ADJS";
pub const SNAPSHOT_VERSION: u32 = 1;

pub(crate) fn write_grid_header(w: &mut impl Write, grid: &Grid) -> Result<()> {
    w.write_all(&(grid.ndim() as u32).to_le_bytes())?;
    for &n in grid.dims() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for &h in grid.spacing() {
        w.write_all(&h.to_le_bytes())?;
    }
    Ok(())
}

/// Reads and checks an axis-count/dims/spacing header against `grid`.
pub(crate) fn check_grid_header(r: &mut impl Read, grid: &Grid) -> Result<()> {
    let ndim = read_u32(r)? as usize;
    if ndim != grid.ndim() {
        return Err(Error::Format(format!(
            "file has {ndim} axes, grid has {}",
            grid.ndim()
        )));
    }
    let dims = (0..ndim).map(|_| read_u64(r)).collect::<Result<Vec<_>>>()?;
    let spacing = (0..ndim).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    let same_dims = dims.iter().zip(grid.dims()).all(|(&a, &b)| a as usize == b);
    if !same_dims {
        return Err(Error::Format(format!(
            "file dims {dims:?} do not match grid dims {:?}",
            grid.dims()
        )));
    }
    let same_spacing = spacing
        .iter()
        .zip(grid.spacing())
        .all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs());
    if !same_spacing {
        return Err(Error::Format(format!(
            "file spacing {spacing:?} does not match grid spacing {:?}",
            grid.spacing()
        )));
    }
    Ok(())
}

pub(crate) fn check_magic(r: &mut impl Read, magic: &[u8; 4], version: u32) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let v = read_u32(r)?;
    if v != version {
        return Err(Error::Format(format!("unsupported format version {v}")));
    }
    Ok(())
}

pub(crate) fn write_values(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn read_values(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_snapshot(w: &mut impl Write, field: &ScalarField) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    write_grid_header(w, field.grid())?;
    write_values(w, field.values())
}

pub fn read_snapshot(r: &mut impl Read, grid: &Arc<Grid>) -> Result<ScalarField> {
    check_magic(r, SNAPSHOT_MAGIC, SNAPSHOT_VERSION)?;
    check_grid_header(r, grid)?;
    let values = read_values(r, grid.len())?;
    ScalarField::from_values(Arc::clone(grid), values)
}
