//! CSV emission. Reals are written with 17 significant digits so they
//! round-trip exactly; files appear atomically via a temp file and rename.

use std::fs;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Writes `rows` under `header` to `dir/name`, replacing any existing file.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| CliError::Io(e.error))?;
    Ok(path)
}
