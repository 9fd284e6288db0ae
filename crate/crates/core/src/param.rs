//! Tunable parameters, regions of interest and the coded-unit transform.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SpotError};
use crate::fileio::fmt_real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    Float,
    Int,
    /// Categorical level, encoded as an integer code.
    Factor,
}

impl ParamType {
    pub fn is_integral(self) -> bool {
        !matches!(self, ParamType::Float)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::Float => "FLOAT",
            ParamType::Int => "INT",
            ParamType::Factor => "FACTOR",
        }
    }
}

impl FromStr for ParamType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "FLOAT" => Ok(ParamType::Float),
            "INT" => Ok(ParamType::Int),
            "FACTOR" => Ok(ParamType::Factor),
            other => Err(format!("unknown parameter type `{other}`")),
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDef {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub ptype: ParamType,
}

impl ParamDef {
    pub fn new(name: impl Into<String>, low: f64, high: f64, ptype: ParamType) -> Self {
        ParamDef {
            name: name.into(),
            low,
            high,
            ptype,
        }
    }

    pub fn center(&self) -> f64 {
        (self.low + self.high) / 2.0
    }

    pub fn half_range(&self) -> f64 {
        (self.high - self.low) / 2.0
    }

    /// Clamp into `[low, high]`; integral types are then rounded half away
    /// from zero.
    pub fn conform(&self, v: f64) -> f64 {
        let clamped = v.clamp(self.low, self.high);
        if self.ptype.is_integral() {
            clamped.round()
        } else {
            clamped
        }
    }
}

/// Ordered list of parameter definitions. The order fixes the column order of
/// every project file.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOfInterest {
    params: Vec<ParamDef>,
}

impl RegionOfInterest {
    pub fn new(params: Vec<ParamDef>) -> Result<Self> {
        if params.is_empty() {
            return Err(SpotError::invalid("region of interest has no parameters"));
        }
        let mut seen = HashSet::new();
        for p in &params {
            if p.name.is_empty() {
                return Err(SpotError::invalid("empty parameter name"));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(SpotError::invalid(format!(
                    "duplicate parameter name `{}`",
                    p.name
                )));
            }
            if !p.low.is_finite() || !p.high.is_finite() {
                return Err(SpotError::NonFinite(format!("bounds of `{}`", p.name)));
            }
            if p.low > p.high {
                return Err(SpotError::invalid(format!(
                    "`{}`: low {} exceeds high {}",
                    p.name, p.low, p.high
                )));
            }
        }
        Ok(RegionOfInterest { params })
    }

    /// Parse ROI file contents: one `NAME LOW HIGH TYPE` line per parameter,
    /// blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 4 {
                return Err(SpotError::parse(
                    lineno,
                    format!("expected `NAME LOW HIGH TYPE`, found {} fields", fields.len()),
                ));
            }
            let low = parse_bound(fields[1], lineno)?;
            let high = parse_bound(fields[2], lineno)?;
            let ptype = fields[3]
                .parse::<ParamType>()
                .map_err(|e| SpotError::parse(lineno, e))?;
            if low > high {
                return Err(SpotError::parse(
                    lineno,
                    format!("low {low} exceeds high {high}"),
                ));
            }
            if !seen.insert(fields[0].to_string()) {
                return Err(SpotError::parse(
                    lineno,
                    format!("duplicate parameter name `{}`", fields[0]),
                ));
            }
            params.push(ParamDef::new(fields[0], low, high, ptype));
        }
        if params.is_empty() {
            return Err(SpotError::parse(0, "region of interest has no parameters"));
        }
        RegionOfInterest::new(params)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.params {
            out.push_str(&format!(
                "{} {} {} {}\n",
                p.name,
                fmt_real(p.low),
                fmt_real(p.high),
                p.ptype
            ));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.low).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.high).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.params.iter().map(ParamDef::center).collect()
    }

    /// Same names and types, new bounds.
    pub fn with_bounds(&self, low: &[f64], high: &[f64]) -> Result<Self> {
        self.check_dim(low.len())?;
        self.check_dim(high.len())?;
        let params = self
            .params
            .iter()
            .zip(low.iter().zip(high))
            .map(|(p, (&l, &h))| ParamDef::new(p.name.clone(), l, h, p.ptype))
            .collect();
        RegionOfInterest::new(params)
    }

    pub fn coded(&self) -> Result<CodedTransform> {
        CodedTransform::new(self)
    }

    pub fn to_coded(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.coded()?.to_coded(point)
    }

    pub fn from_coded(&self, coded: &[f64]) -> Result<Vec<f64>> {
        self.coded()?.from_coded(coded)
    }

    pub fn conform(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point.len())?;
        if point.iter().any(|v| !v.is_finite()) {
            return Err(SpotError::NonFinite("point to conform".into()));
        }
        Ok(self
            .params
            .iter()
            .zip(point)
            .map(|(p, &v)| p.conform(v))
            .collect())
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && self
                .params
                .iter()
                .zip(point)
                .all(|(p, &v)| v >= p.low && v <= p.high)
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(SpotError::Dimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

fn parse_bound(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| SpotError::parse(line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(SpotError::parse(line, format!("bound `{s}` is not finite")));
    }
    Ok(v)
}

pub fn parse_roi(text: &str) -> Result<RegionOfInterest> {
    RegionOfInterest::parse(text)
}

/// Affine map of each ROI dimension onto `[-1, 1]`.
///
/// Bounds and the midpoint map to `-1`, `+1` and `0` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedTransform {
    low: Vec<f64>,
    high: Vec<f64>,
    center: Vec<f64>,
    half_range: Vec<f64>,
}

impl CodedTransform {
    pub fn new(roi: &RegionOfInterest) -> Result<Self> {
        for p in roi.params() {
            if p.half_range() <= 0.0 {
                return Err(SpotError::ZeroRange(p.name.clone()));
            }
        }
        Ok(CodedTransform {
            low: roi.lower(),
            high: roi.upper(),
            center: roi.center(),
            half_range: roi.params().iter().map(ParamDef::half_range).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_range(&self) -> &[f64] {
        &self.half_range
    }

    pub fn to_coded(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check(point)?;
        Ok((0..self.dim())
            .map(|i| {
                let (x, lo, hi) = (point[i], self.low[i], self.high[i]);
                if x == self.center[i] {
                    0.0
                } else {
                    ((x - lo) - (hi - x)) / (hi - lo)
                }
            })
            .collect())
    }

    pub fn from_coded(&self, coded: &[f64]) -> Result<Vec<f64>> {
        self.check(coded)?;
        Ok((0..self.dim())
            .map(|i| match coded[i] {
                u if u == -1.0 => self.low[i],
                u if u == 1.0 => self.high[i],
                u if u == 0.0 => self.center[i],
                u => self.center[i] + u * self.half_range[i],
            })
            .collect())
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(SpotError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }
}
