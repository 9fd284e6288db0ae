//! Readers and writers for the project files.
//!
//! Every table is whitespace separated text with a header row. Writers emit
//! LF line endings and single spaces; reals use the shortest decimal that
//! parses back to the same `f64`, so `read(write(x)) == x` holds exactly.

mod apd;
mod bst;
mod des;
pub mod kv;
mod res;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, SpotError};
use crate::param::RegionOfInterest;

pub use apd::{parse_apd, Apd, ApdValue};
pub use bst::{append_bst, parse_bst, read_bst, BestRecord};
pub use des::{des_to_text, parse_des, read_des, write_des};
pub use res::{append_res, parse_res, read_res, res_header, ResultRecord, ResultTable};

/// Shortest round-trip decimal. Magnitudes outside `[1e-5, 1e15)` switch to
/// scientific notation.
pub fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !(1e-5..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// `x` rounded to `digits` significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    if mag >= digits as i32 + 6 || mag < -5 {
        return format!("{:.*e}", digits - 1, x);
    }
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub(crate) fn parse_real(tok: &str, line: usize, column: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| SpotError::parse(line, format!("column {column}: `{tok}` is not a number")))
}

pub(crate) fn parse_uint(tok: &str, line: usize, column: &str) -> Result<u64> {
    if let Ok(v) = tok.parse::<u64>() {
        return Ok(v);
    }
    // Integral columns written by other tools sometimes carry a decimal point.
    match tok.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) => Ok(v as u64),
        _ => Err(SpotError::parse(
            line,
            format!("column {column}: `{tok}` is not a non-negative integer"),
        )),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SpotError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SpotError::io(path, e))
}

pub fn read_roi(path: &Path) -> Result<RegionOfInterest> {
    RegionOfInterest::parse(&read_text(path)?)
}

pub fn write_roi(roi: &RegionOfInterest, path: &Path) -> Result<()> {
    write_text(path, &roi.to_text())
}

/// File locations of one project: all files share a directory and basename.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectPaths {
    pub dir: PathBuf,
    pub basename: String,
}

impl ProjectPaths {
    pub fn new(dir: impl Into<PathBuf>, basename: impl Into<String>) -> Self {
        ProjectPaths {
            dir: dir.into(),
            basename: basename.into(),
        }
    }

    /// Paths for the project whose configuration file is `conf`.
    pub fn from_conf(conf: &Path) -> Self {
        let dir = conf
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        let basename = conf
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        ProjectPaths { dir, basename }
    }

    pub fn with_ext(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{}", self.basename, ext))
    }

    pub fn conf(&self) -> PathBuf {
        self.with_ext("conf")
    }
    pub fn roi(&self) -> PathBuf {
        self.with_ext("roi")
    }
    pub fn apd(&self) -> PathBuf {
        self.with_ext("apd")
    }
    pub fn des(&self) -> PathBuf {
        self.with_ext("des")
    }
    pub fn res(&self) -> PathBuf {
        self.with_ext("res")
    }
    pub fn bst(&self) -> PathBuf {
        self.with_ext("bst")
    }
    pub fn aroi(&self) -> PathBuf {
        self.with_ext("aroi")
    }
}
