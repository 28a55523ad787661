use std::io::Write;
use std::path::Path;

use geofuse::fusion::{read_gft, write_gft};
use geofuse::raster::{read_ascii_grid, write_ascii_grid};
use geofuse::{FusedTensor, Grid, GridKind};

use crate::CliError;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<Grid, CliError> {
    read_ascii_grid(&read_bytes(path)?).map_err(|e| CliError::data(path, e))
}

pub fn read_class_grid(path: &Path) -> Result<Grid, CliError> {
    read_grid(path)?
        .into_kind(GridKind::Categorical)
        .map_err(|e| CliError::data(path, e))
}

pub fn write_grid(path: &Path, grid: &Grid) -> Result<(), CliError> {
    let bytes = write_ascii_grid(grid)?;
    write_atomic(path, &bytes)
}

pub fn read_tensor(path: &Path) -> Result<FusedTensor, CliError> {
    read_gft(&read_bytes(path)?).map_err(|e| CliError::data(path, e))
}

pub fn write_tensor(path: &Path, tensor: &FusedTensor) -> Result<(), CliError> {
    write_atomic(path, &write_gft(tensor)?)
}

/// Rows of comma-separated numbers. A first line that does not parse is
/// treated as a header and skipped. Blank and `#` lines are ignored.
pub fn read_number_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = s.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if first => {}
            Err(_) => {
                return Err(CliError::Invalid(format!("{}:{}: expected comma-separated numbers", path.display(), i + 1)))
            }
        }
        first = false;
    }
    Ok(rows)
}

/// One number per row (first column).
pub fn read_number_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let rows = read_number_rows(path)?;
    if let Some(i) = rows.iter().position(|r| r.len() != 1) {
        return Err(CliError::Invalid(format!("{}: row {} has {} values, expected 1", path.display(), i + 1, rows[i].len())));
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}
