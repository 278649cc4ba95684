//! CSV tables and JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::ensemble::EnsembleSummary;
use crate::error::Result;

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Writes `<kind>.csv` plus companion tables, `summary.json` and
/// `timings.json` into `dir`. Returns the paths written.
pub fn write_summary(dir: &Path, s: &EnsembleSummary) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let mut table = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = dir.join(name);
        f(&p)?;
        out.push(p);
        Ok(())
    };
    if !s.lln.is_empty() {
        table("lln.csv", &|p| write_csv(p, &s.lln))?;
    }
    if !s.slopes.is_empty() {
        table("lln_slopes.csv", &|p| write_csv(p, &s.slopes))?;
    }
    if !s.clt.is_empty() {
        table("clt.csv", &|p| write_csv(p, &s.clt))?;
    }
    if !s.corr.is_empty() {
        table("corr.csv", &|p| write_csv(p, &s.corr))?;
    }
    if !s.membership.is_empty() {
        table("membership.csv", &|p| write_csv(p, &s.membership))?;
    }
    if !s.failures.is_empty() {
        table("failures.csv", &|p| write_csv(p, &s.failures))?;
    }
    table("summary.json", &|p| write_json(p, s))?;
    table("timings.json", &|p| write_json(p, &s.timings))?;
    Ok(out)
}
