//! CSV and JSON output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Column order of the result table.
pub const CSV_HEADER: &str = "scenario,n,k,m,sigma,l,method,mean_error,sd_error,mean_time_s,replicates,seed";

pub fn write_csv<S: Serialize, W: Write>(rows: &[S], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<S: Serialize>(rows: &[S], path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(rows, BufWriter::new(file))
}

pub fn write_json_file<S: Serialize + ?Sized>(value: &S, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}
