//! `key = value` lines shared by CONF and APD files.
//!
//! Values are numbers (plain or scientific), `TRUE`/`FALSE`, double-quoted
//! strings, or numeric vectors written `(1, 2)`, `c(1, 2)` or `[1, 2]`. Lines
//! starting with `#` are comments and a trailing `;` is ignored.

use std::fmt;

use crate::error::{Result, SpotError};
use crate::fileio::fmt_real;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    Vector(Vec<f64>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Vector(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    pub fn as_vec(&self) -> Option<Vec<f64>> {
        match self {
            Value::Num(v) => Some(vec![*v]),
            Value::Vector(v) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Plain rendering for command-line substitution: strings unquoted,
    /// vectors space separated.
    pub fn plain(&self) -> String {
        match self {
            Value::Num(v) => fmt_real(*v),
            Value::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
            Value::Str(s) => s.clone(),
            Value::Vector(v) => v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(" "),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| fmt_real(*x)).collect();
                write!(f, "({})", parts.join(", "))
            }
            other => f.write_str(&other.plain()),
        }
    }
}

pub fn parse_value(raw: &str) -> std::result::Result<Value, String> {
    let s = raw.trim();
    if s.is_empty() {
        return Err("empty value".into());
    }
    if let Some(inner) = s.strip_prefix('"') {
        return inner
            .strip_suffix('"')
            .map(|v| Value::Str(v.to_string()))
            .ok_or_else(|| format!("unterminated string `{s}`"));
    }
    if let Some(inner) = s.strip_prefix('\'') {
        return inner
            .strip_suffix('\'')
            .map(|v| Value::Str(v.to_string()))
            .ok_or_else(|| format!("unterminated string `{s}`"));
    }
    match s {
        "TRUE" | "T" => return Ok(Value::Bool(true)),
        "FALSE" | "F" => return Ok(Value::Bool(false)),
        _ => {}
    }
    let body = s
        .strip_prefix("c(")
        .or_else(|| s.strip_prefix('('))
        .and_then(|b| b.strip_suffix(')'))
        .or_else(|| s.strip_prefix('[').and_then(|b| b.strip_suffix(']')));
    if let Some(body) = body {
        let items: std::result::Result<Vec<f64>, String> = body
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
            .collect();
        return items.map(Value::Vector);
    }
    if let Ok(v) = s.parse::<f64>() {
        return Ok(Value::Num(v));
    }
    // Bare words such as plugin names.
    if s.chars().all(|c| c.is_alphanumeric() || "._-/".contains(c)) {
        return Ok(Value::Str(s.to_string()));
    }
    Err(format!("cannot parse value `{s}`"))
}

/// Split one `key = value` assignment. Returns `None` for blank and comment
/// lines.
pub fn parse_assignment(line: &str) -> std::result::Result<Option<(String, Value)>, String> {
    let t = line.trim();
    if t.is_empty() || t.starts_with('#') {
        return Ok(None);
    }
    let t = t.strip_suffix(';').unwrap_or(t);
    let (key, value) = t
        .split_once("<-")
        .or_else(|| t.split_once('='))
        .ok_or_else(|| format!("expected `key = value`, found `{t}`"))?;
    let key = key.trim();
    if key.is_empty() || key.contains(char::is_whitespace) {
        return Err(format!("invalid key `{key}`"));
    }
    Ok(Some((key.to_string(), parse_value(value)?)))
}

/// Parse every assignment in `text`, keeping line numbers for diagnostics.
pub fn parse_lines(text: &str) -> Result<Vec<(usize, String, Value)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        match parse_assignment(line) {
            Ok(Some((k, v))) => out.push((idx + 1, k, v)),
            Ok(None) => {}
            Err(msg) => return Err(SpotError::parse(idx + 1, msg)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_forms() {
        assert_eq!(parse_value("10").unwrap(), Value::Num(10.0));
        assert_eq!(parse_value("1e-3").unwrap(), Value::Num(1e-3));
        assert_eq!(parse_value("TRUE").unwrap(), Value::Bool(true));
        assert_eq!(parse_value("\"spotPredictRandomForest\"").unwrap(), Value::Str("spotPredictRandomForest".into()));
        assert_eq!(parse_value("c(10,10)").unwrap(), Value::Vector(vec![10.0, 10.0]));
        assert_eq!(parse_value("(10, 10)").unwrap(), Value::Vector(vec![10.0, 10.0]));
        assert_eq!(parse_value("[1.5]").unwrap(), Value::Vector(vec![1.5]));
        assert_eq!(parse_value("branin").unwrap(), Value::Str("branin".into()));
        assert!(parse_value("\"open").is_err());
        assert!(parse_value("(1, x)").is_err());
    }

    #[test]
    fn assignments() {
        let lines = parse_lines("# comment\n\nx0 = c(10,10);\nmaxit <- 250\n").unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], (3, "x0".into(), Value::Vector(vec![10.0, 10.0])));
        assert_eq!(lines[1], (4, "maxit".into(), Value::Num(250.0)));
        assert!(matches!(parse_lines("a b"), Err(SpotError::Parse { line: 1, .. })));
    }

    #[test]
    fn display_round_trips() {
        for v in [
            Value::Num(0.25),
            Value::Bool(false),
            Value::Str("a b".into()),
            Value::Vector(vec![1.0, -2.5]),
        ] {
            assert_eq!(parse_value(&v.to_string()).unwrap(), v);
        }
    }
}
