//! Atomic file output and the sweep CSV schema.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const SWEEP_HEADER: &str = "rho,alpha,metric,value,ci_low,ci_high,bound,flag";

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// `out.csv` → `out.json`
pub fn report_path_for(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flag {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Flag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::Pass => "PASS",
            Flag::Fail => "FAIL",
        }
    }
}

/// One line of a sweep CSV. Optional fields render as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub alpha: String,
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub bound: Option<f64>,
    pub flag: Option<Flag>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.16e},{},{},{},{}\n",
            r.rho,
            r.alpha,
            r.metric,
            r.value,
            cell(r.ci_low),
            cell(r.ci_high),
            cell(r.bound),
            r.flag.map(|f| f.as_str()).unwrap_or_default(),
        ));
    }
    out
}
