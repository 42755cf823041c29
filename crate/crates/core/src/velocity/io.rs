//! `ADJV` series files: magic, version, axis count, dims, spacing, snapshot
//! count, snapshot spacing, then snapshots in time order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::VelocitySeries;
use crate::domain::snapshot::{
    check_grid_header, check_magic, read_f64, read_u64, read_values, write_grid_header,
    write_values,
};
use crate::domain::Grid;
use crate::error::Result;

pub const SERIES_MAGIC: &[u8; 4] = b"ADJV";
pub const SERIES_VERSION: u32 = 1;

pub fn write_series(w: &mut impl Write, series: &VelocitySeries) -> Result<()> {
    w.write_all(SERIES_MAGIC)?;
    w.write_all(&SERIES_VERSION.to_le_bytes())?;
    write_grid_header(w, series.grid())?;
    w.write_all(&(series.len() as u64).to_le_bytes())?;
    w.write_all(&series.dt().to_le_bytes())?;
    for k in 0..series.len() {
        write_values(w, series.snapshot(k))?;
    }
    Ok(())
}

pub fn read_series(r: &mut impl Read, grid: &Arc<Grid>) -> Result<VelocitySeries> {
    check_magic(r, SERIES_MAGIC, SERIES_VERSION)?;
    check_grid_header(r, grid)?;
    let count = read_u64(r)? as usize;
    let dt = read_f64(r)?;
    let per = grid.ndim() * grid.len();
    let snapshots = (0..count)
        .map(|_| read_values(r, per))
        .collect::<Result<Vec<_>>>()?;
    VelocitySeries::new(Arc::clone(grid), dt, snapshots)
}

pub fn store_series(series: &VelocitySeries, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_series(&mut w, series)?;
    w.flush()?;
    Ok(())
}

pub fn load_series(path: &Path, grid: &Arc<Grid>) -> Result<VelocitySeries> {
    let mut r = BufReader::new(File::open(path)?);
    read_series(&mut r, grid)
}
