//! CSV reports with a commented provenance header, written atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use spdv_core::convergence::{ErrorLadder, SlopeFit};

use crate::error::LabError;

/// Header lines identifying the run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
    /// Optional wall-clock stamp. Left out by default so reruns are byte-identical.
    pub stamp: Option<String>,
}

impl Provenance {
    pub fn header(&self) -> String {
        let mut h = format!(
            "# spdv-lab {}\n# config_sha256: {}\n# seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_digest,
            self.seed
        );
        if let Some(stamp) = &self.stamp {
            let _ = writeln!(h, "# stamp: {stamp}");
        }
        h
    }
}

/// Rows of comma-separated cells under a header line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form; `inf` for unbounded horizons.
pub fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Level table followed by the slope summary. An unfittable ladder gets
/// `NA` in the slope columns.
pub fn ladder_csv(ladder: &ErrorLadder, fit: Option<&SlopeFit>) -> String {
    let mut levels = Table::new(&["N", "error", "stderr", "paths", "resolved"]);
    for l in &ladder.levels {
        levels.push(vec![l.n.to_string(), num(l.error), num(l.std_error), l.paths.to_string(), l.resolved.to_string()]);
    }
    let mut summary = Table::new(&["slope", "slope_se", "levels_used"]);
    summary.push(match fit {
        Some(f) => vec![num(f.slope), num(f.slope_se), f.used.len().to_string()],
        None => {
            let used = ladder.levels.iter().filter(|l| l.resolved).count();
            vec!["NA".into(), "NA".into(), used.to_string()]
        }
    });
    levels.render() + &summary.render()
}

/// Writes header and body to `dir/name` through a temporary file in `dir`.
pub fn write_atomic(dir: &Path, name: &str, provenance: &Provenance, body: &str) -> Result<PathBuf, LabError> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(provenance.header().as_bytes())?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| LabError::Io(e.error))?;
    Ok(path)
}

/// Strips `#` lines.
pub fn body_of(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}
