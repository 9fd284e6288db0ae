use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, SpotError};
use crate::fileio::{fmt_real, parse_real, parse_uint, read_text};

/// One algorithm run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub y: f64,
    pub values: Vec<f64>,
    pub seed: u64,
    pub config: u64,
    pub step: u32,
}

/// Contents of a result file, rows in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub names: Vec<String>,
    pub rows: Vec<ResultRecord>,
}

impl ResultTable {
    pub fn new(names: Vec<String>) -> Self {
        ResultTable {
            names,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of runs recorded for `config`.
    pub fn count(&self, config: u64) -> usize {
        self.rows.iter().filter(|r| r.config == config).count()
    }

    pub fn max_config(&self) -> u64 {
        self.rows.iter().map(|r| r.config).max().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = res_header(&self.names);
        for r in &self.rows {
            out.push_str(&record_line(r));
        }
        out
    }
}

pub fn res_header(names: &[String]) -> String {
    format!("Y {} SEED CONFIG STEP\n", names.join(" "))
}

fn record_line(r: &ResultRecord) -> String {
    let mut line = fmt_real(r.y);
    for v in &r.values {
        line.push(' ');
        line.push_str(&fmt_real(*v));
    }
    line.push_str(&format!(" {} {} {}\n", r.seed, r.config, r.step));
    line
}

/// Append records, writing the header first when the file is new or empty.
/// Existing rows are never rewritten.
pub fn append_res(records: &[ResultRecord], names: &[String], path: &Path) -> Result<()> {
    let existing = match std::fs::read_to_string(path) {
        Ok(t) => Some(t),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(SpotError::io(path, e)),
    };
    let mut buf = String::new();
    match existing.as_deref().map(str::trim) {
        None | Some("") => buf.push_str(&res_header(names)),
        Some(text) => {
            let table = parse_res(text)?;
            if table.names != names {
                return Err(SpotError::invalid(format!(
                    "{}: parameter columns `{}` differ from `{}`",
                    path.display(),
                    table.names.join(" "),
                    names.join(" ")
                )));
            }
        }
    }
    for r in records {
        if r.values.len() != names.len() {
            return Err(SpotError::Dimension {
                expected: names.len(),
                got: r.values.len(),
            });
        }
        if !r.y.is_finite() {
            return Err(SpotError::NonFinite(format!("Y of config {}", r.config)));
        }
        buf.push_str(&record_line(r));
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| SpotError::io(path, e))?;
    if matches!(existing.as_deref(), Some(t) if !t.is_empty() && !t.ends_with('\n')) {
        buf.insert(0, '\n');
    }
    file.write_all(buf.as_bytes())
        .map_err(|e| SpotError::io(path, e))
}

/// Parse result file contents. The header is `Y <params...> SEED CONFIG`,
/// optionally followed by `STEP`; rows without a step read as step 0.
pub fn parse_res(text: &str) -> Result<ResultTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hidx, header)) = lines.next() else {
        return Ok(ResultTable::default());
    };
    let cols: Vec<&str> = header.split_whitespace().collect();
    let has_step = cols.last() == Some(&"STEP");
    let tail = if has_step { 3 } else { 2 };
    if cols.len() < tail + 1
        || cols[0] != "Y"
        || cols[cols.len() - tail] != "SEED"
        || cols[cols.len() - tail + 1] != "CONFIG"
    {
        return Err(SpotError::parse(
            hidx + 1,
            format!("result header `{header}` is not `Y <params> SEED CONFIG [STEP]`"),
        ));
    }
    let names: Vec<String> = cols[1..cols.len() - tail].iter().map(|s| s.to_string()).collect();
    let n = names.len();
    let mut table = ResultTable::new(names);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != cols.len() {
            return Err(SpotError::parse(
                lineno,
                format!("expected {} fields, found {}", cols.len(), toks.len()),
            ));
        }
        let y = parse_real(toks[0], lineno, "Y")?;
        let values = (0..n)
            .map(|i| parse_real(toks[1 + i], lineno, &table.names[i]))
            .collect::<Result<Vec<f64>>>()?;
        let config = parse_uint(toks[n + 2], lineno, "CONFIG")?;
        if config == 0 {
            return Err(SpotError::parse(lineno, "CONFIG must be at least 1"));
        }
        table.rows.push(ResultRecord {
            y,
            values,
            seed: parse_uint(toks[n + 1], lineno, "SEED")?,
            config,
            step: if has_step {
                parse_uint(toks[n + 3], lineno, "STEP")? as u32
            } else {
                0
            },
        });
    }
    Ok(table)
}

pub fn read_res(path: &Path) -> Result<ResultTable> {
    parse_res(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(y: f64, config: u64) -> ResultRecord {
        ResultRecord { y, values: vec![1.283295, 41.0], seed: 1235, config, step: 0 }
    }

    fn names() -> Vec<String> {
        vec!["TEMP".into(), "TMAX".into()]
    }

    #[test]
    fn append_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.res");
        append_res(&[rec(0.5, 1), rec(0.25, 1)], &names(), &path).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        append_res(&[rec(1.0, 2), rec(2.0, 2), rec(3.0, 3)], &names(), &path).unwrap();
        let second = std::fs::read_to_string(&path).unwrap();
        assert!(second.starts_with(&first));
        let table = read_res(&path).unwrap();
        assert_eq!(table.len(), 5);
        assert_eq!(table.rows[4], rec(3.0, 3));
        assert_eq!(first, "Y TEMP TMAX SEED CONFIG STEP\n0.5 1.283295 41 1235 1 0\n0.25 1.283295 41 1235 1 0\n");
    }

    #[test]
    fn header_only_is_empty() {
        let t = parse_res("Y TEMP TMAX SEED CONFIG STEP\n").unwrap();
        assert!(t.is_empty());
        assert_eq!(t.names, names());
        assert!(parse_res("").unwrap().is_empty());
    }

    #[test]
    fn step_column_optional() {
        let t = parse_res("Y TEMP TMAX SEED CONFIG\n0.4 1 41 7 3\n").unwrap();
        assert_eq!(t.rows[0].step, 0);
        assert_eq!(t.rows[0].config, 3);
    }

    #[test]
    fn corrupt_rows_report_line() {
        let err = parse_res("Y A SEED CONFIG STEP\n1 2 3 4 5\n1 x 3 4 5\n").unwrap_err();
        assert!(matches!(err, SpotError::Parse { line: 3, .. }), "{err}");
        assert!(parse_res("A B\n").is_err());
    }

    #[test]
    fn mismatched_columns_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.res");
        append_res(&[rec(0.5, 1)], &names(), &path).unwrap();
        assert!(append_res(&[rec(0.5, 1)], &["A".into(), "B".into()], &path).is_err());
    }
}
