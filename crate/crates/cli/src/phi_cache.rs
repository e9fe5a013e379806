//! On-disk cache of phi tables, one CSV file per grid step.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rangecorr::{PhiTable, QuadratureSpec};

use crate::error::{CliError, Result};

pub const CACHE_DIR_ENV: &str = "RANGECORR_CACHE_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum CacheOutcome {
    /// No cache directory configured.
    Uncached,
    Loaded(PathBuf),
    Built(PathBuf),
    /// The cached file was unreadable or for another grid; it was replaced.
    Rebuilt { path: PathBuf, reason: String },
}

pub fn cache_path(dir: &Path, step: f64) -> PathBuf {
    dir.join(format!("phi_step_{step}.csv"))
}

pub fn write_table(table: &PhiTable, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display().to_string(), e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    table
        .write_csv(BufWriter::new(file))
        .map_err(|e| CliError::io(path.display().to_string(), e))
}

fn try_load(path: &Path, step: f64) -> std::result::Result<PhiTable, String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let table = PhiTable::read_csv(BufReader::new(file)).map_err(|e| e.to_string())?;
    let expected = PhiTable::intervals_for_step(step).map_err(|e| e.to_string())? + 1;
    if table.len() != expected {
        return Err(format!(
            "cached grid has {} points, step {step} needs {expected}",
            table.len()
        ));
    }
    Ok(table)
}

/// Loads the table for `step` from `dir` when present and valid, otherwise
/// builds it and (with a directory) writes it back.
pub fn load_or_build(step: f64, dir: Option<&Path>, q: &QuadratureSpec) -> Result<(PhiTable, CacheOutcome)> {
    PhiTable::intervals_for_step(step)?;
    let Some(dir) = dir else {
        return Ok((PhiTable::build(step, q)?, CacheOutcome::Uncached));
    };
    let path = cache_path(dir, step);
    if !path.exists() {
        let table = PhiTable::build(step, q)?;
        write_table(&table, &path)?;
        return Ok((table, CacheOutcome::Built(path)));
    }
    match try_load(&path, step) {
        Ok(table) => Ok((table, CacheOutcome::Loaded(path))),
        Err(reason) => {
            let table = PhiTable::build(step, q)?;
            write_table(&table, &path)?;
            Ok((table, CacheOutcome::Rebuilt { path, reason }))
        }
    }
}
