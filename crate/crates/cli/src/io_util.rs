//! File listing, basename pairing, and atomic writes (temp + rename, so a
//! crashed run never leaves a half-written data file).

use std::fs;
use std::path::{Path, PathBuf};

use crate::errors::CliError;

/// Sorted list of files with the given extension; deterministic order.
pub fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::input(&format!("reading {}", dir.display()), e))?;
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == extension) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// Writes through a temp file in the same directory, then renames.
pub fn atomic_write(
    path: &Path,
    write: impl FnOnce(&Path) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let tmp = dir.join(format!(".{}.tmp-{}", name, std::process::id()));
    write(&tmp)?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::input(&format!("renaming into {}", path.display()), e))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::input(&format!("creating {}", dir.display()), e))
}

/// Pairs of (converted, target) files matched by basename, sorted.
pub fn pair_by_stem(
    left: &[PathBuf],
    right_dir: &Path,
    right_ext: &str,
) -> Vec<(PathBuf, PathBuf)> {
    let mut pairs = Vec::new();
    for l in left {
        let candidate = right_dir.join(format!("{}.{}", stem(l), right_ext));
        if candidate.is_file() {
            pairs.push((l.clone(), candidate));
        }
    }
    pairs
}
