use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::domain::{write_snapshot, ScalarField};
use crate::error::{Error, Result};
use crate::time::TimeAxis;

/// Write one snapshot file per step under `dir`, plus `index.csv` listing
/// step, time and file name.
pub fn dump_history(dir: &Path, fields: &[ScalarField], time: &TimeAxis) -> Result<()> {
    if fields.len() != time.len() {
        return Err(Error::Shape(format!(
            "{} fields for {} time samples",
            fields.len(),
            time.len()
        )));
    }
    fs::create_dir_all(dir)?;
    let mut index = csv::Writer::from_path(dir.join("index.csv"))?;
    index.write_record(["step", "t", "file"])?;
    for (n, f) in fields.iter().enumerate() {
        let name = format!("step_{n:06}.adjs");
        let mut w = BufWriter::new(File::create(dir.join(&name))?);
        write_snapshot(&mut w, f)?;
        w.flush()?;
        index.write_record([n.to_string(), time.time(n).to_string(), name])?;
    }
    index.flush()?;
    Ok(())
}
