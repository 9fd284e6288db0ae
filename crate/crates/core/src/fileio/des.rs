use std::path::Path;

use crate::design::{DesignPoint, DesignTable};
use crate::error::{Result, SpotError};
use crate::fileio::{fmt_real, parse_real, parse_uint, read_text, write_text};
use crate::param::RegionOfInterest;

const META: [&str; 4] = ["CONFIG", "REPEATS", "STEP", "SEED"];

pub fn des_to_text(table: &DesignTable) -> String {
    let mut out = table.roi.names().join(" ");
    out.push(' ');
    out.push_str(&META.join(" "));
    out.push('\n');
    for row in &table.rows {
        for v in &row.values {
            out.push_str(&fmt_real(*v));
            out.push(' ');
        }
        out.push_str(&format!("{} {} {} {}\n", row.config, row.repeats, row.step, row.seed));
    }
    out
}

pub fn write_des(table: &DesignTable, path: &Path) -> Result<()> {
    write_text(path, &des_to_text(table))
}

/// Parse a design file against `roi`. The header must list the ROI names in
/// order followed by `CONFIG REPEATS STEP SEED`.
pub fn parse_des(text: &str, roi: &RegionOfInterest) -> Result<DesignTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hidx, header)) = lines.next() else {
        return Err(SpotError::parse(1, "design file has no header"));
    };
    let cols: Vec<&str> = header.split_whitespace().collect();
    let names = roi.names();
    for c in &cols {
        if !names.iter().any(|n| n == c) && !META.contains(c) {
            return Err(SpotError::parse(hidx + 1, format!("unknown column `{c}`")));
        }
    }
    let expected: Vec<&str> = names.iter().map(String::as_str).chain(META).collect();
    if cols != expected {
        return Err(SpotError::parse(
            hidx + 1,
            format!("header `{}` does not match `{}`", cols.join(" "), expected.join(" ")),
        ));
    }
    let n = names.len();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != expected.len() {
            return Err(SpotError::parse(
                lineno,
                format!("expected {} fields, found {}", expected.len(), toks.len()),
            ));
        }
        let values = toks[..n]
            .iter()
            .zip(&names)
            .map(|(t, name)| parse_real(t, lineno, name))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(DesignPoint {
            values,
            config: parse_uint(toks[n], lineno, "CONFIG")?,
            repeats: parse_uint(toks[n + 1], lineno, "REPEATS")? as u32,
            step: parse_uint(toks[n + 2], lineno, "STEP")? as u32,
            seed: parse_uint(toks[n + 3], lineno, "SEED")?,
        });
    }
    Ok(DesignTable {
        roi: roi.clone(),
        rows,
    })
}

pub fn read_des(path: &Path, roi: &RegionOfInterest) -> Result<DesignTable> {
    parse_des(&read_text(path)?, roi)
}
