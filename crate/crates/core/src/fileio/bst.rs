use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, SpotError};
use crate::fileio::{fmt_real, parse_real, parse_uint, read_text};

/// Incumbent configuration after one tuning step.
#[derive(Debug, Clone, PartialEq)]
pub struct BestRecord {
    /// Utility (mean of the configuration's results when written).
    pub y: f64,
    pub values: Vec<f64>,
    pub count: u64,
    pub config: u64,
    pub step: u32,
}

fn header(names: &[String]) -> String {
    format!("Y {} COUNT CONFIG STEP\n", names.join(" "))
}

fn line(r: &BestRecord) -> String {
    let mut out = fmt_real(r.y);
    for v in &r.values {
        out.push(' ');
        out.push_str(&fmt_real(*v));
    }
    out.push_str(&format!(" {} {} {}\n", r.count, r.config, r.step));
    out
}

pub fn append_bst(record: &BestRecord, names: &[String], path: &Path) -> Result<()> {
    let fresh = match std::fs::metadata(path) {
        Ok(m) => m.len() == 0,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => true,
        Err(e) => return Err(SpotError::io(path, e)),
    };
    let mut buf = String::new();
    if fresh {
        buf.push_str(&header(names));
    }
    buf.push_str(&line(record));
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| SpotError::io(path, e))?;
    file.write_all(buf.as_bytes())
        .map_err(|e| SpotError::io(path, e))
}

pub fn parse_bst(text: &str) -> Result<(Vec<String>, Vec<BestRecord>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hidx, head)) = lines.next() else {
        return Ok((Vec::new(), Vec::new()));
    };
    let cols: Vec<&str> = head.split_whitespace().collect();
    let k = cols.len();
    if k < 4 || cols[0] != "Y" || cols[k - 3..] != ["COUNT", "CONFIG", "STEP"] {
        return Err(SpotError::parse(
            hidx + 1,
            format!("best header `{head}` is not `Y <params> COUNT CONFIG STEP`"),
        ));
    }
    let names: Vec<String> = cols[1..k - 3].iter().map(|s| s.to_string()).collect();
    let n = names.len();
    let mut rows = Vec::new();
    for (idx, l) in lines {
        let lineno = idx + 1;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != k {
            return Err(SpotError::parse(lineno, format!("expected {k} fields, found {}", toks.len())));
        }
        rows.push(BestRecord {
            y: parse_real(toks[0], lineno, "Y")?,
            values: (0..n)
                .map(|i| parse_real(toks[1 + i], lineno, &names[i]))
                .collect::<Result<_>>()?,
            count: parse_uint(toks[n + 1], lineno, "COUNT")?,
            config: parse_uint(toks[n + 2], lineno, "CONFIG")?,
            step: parse_uint(toks[n + 3], lineno, "STEP")? as u32,
        });
    }
    Ok((names, rows))
}

pub fn read_bst(path: &Path) -> Result<(Vec<String>, Vec<BestRecord>)> {
    parse_bst(&read_text(path)?)
}
