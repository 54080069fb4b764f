//! Loading filter coefficients from a directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ctmark_core::filters::{FilterSet, FILE_NAMES};

/// Environment variable naming a directory with replacement coefficient files.
pub const FILTER_DIR_ENV: &str = "CTMARK_FILTER_DIR";

/// Filters from `dir`, else from `$CTMARK_FILTER_DIR`, else the built-in set.
pub fn load(dir: Option<&Path>) -> Result<FilterSet> {
    let dir: Option<PathBuf> = match dir {
        Some(d) => Some(d.to_path_buf()),
        None => std::env::var_os(FILTER_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    let Some(dir) = dir else {
        return Ok(FilterSet::default());
    };
    let mut texts = Vec::with_capacity(FILE_NAMES.len());
    for name in FILE_NAMES {
        let p = dir.join(name);
        texts.push(std::fs::read_to_string(&p).with_context(|| format!("reading filter file {}", p.display()))?);
    }
    let set = FilterSet::from_texts([&texts[0], &texts[1], &texts[2], &texts[3]])
        .with_context(|| format!("parsing filters in {}", dir.display()))?;
    Ok(set)
}
