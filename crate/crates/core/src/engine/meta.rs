use std::fmt::Write as _;
use std::fs;

use crate::engine::{ConfigRecord, Project};
use crate::error::{Result, SpotError};
use crate::fileio::kv::{parse_assignment, Value};
use crate::fileio::{fmt_sig, write_roi, ProjectPaths};

/// One instance per non-blank line: `;`-separated `key = value` APD
/// overrides. `#` starts a comment line.
pub fn parse_instances(text: &str) -> Result<Vec<Vec<(String, Value)>>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut inst = Vec::new();
        for part in t.split(';') {
            match parse_assignment(part) {
                Ok(Some(kv)) => inst.push(kv),
                Ok(None) => {}
                Err(msg) => return Err(SpotError::parse(idx + 1, msg)),
            }
        }
        out.push(inst);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaRow {
    /// 1-based instance number, also the name of its project directory.
    pub instance: usize,
    /// Incumbent and number of evaluations, or the failure message.
    pub outcome: std::result::Result<(ConfigRecord, u64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaSummary {
    pub names: Vec<String>,
    pub rows: Vec<MetaRow>,
}

impl MetaSummary {
    pub fn to_text(&self) -> String {
        let mut out = format!("INSTANCE Y {} EVALUATIONS\n", self.names.join(" "));
        for r in &self.rows {
            match &r.outcome {
                Ok((best, evals)) => {
                    let vals: Vec<String> = best.values.iter().map(|v| fmt_sig(*v, 7)).collect();
                    let _ = writeln!(out, "{} {} {} {}", r.instance, fmt_sig(best.utility, 7), vals.join(" "), evals);
                }
                Err(msg) => {
                    let _ = writeln!(out, "{} FAILED {msg}", r.instance);
                }
            }
        }
        out
    }
}

impl Project {
    /// Tune once per instance, each in `<dir>/<basename>.meta/<i>/`. A failed
    /// instance is recorded and the others still run. The summary is also
    /// written to `<basename>.meta/summary.txt`.
    pub fn meta_task(&self, instances: &[Vec<(String, Value)>]) -> Result<MetaSummary> {
        if instances.is_empty() {
            return Err(SpotError::invalid("the meta task needs at least one instance"));
        }
        let root = self.paths.dir.join(format!("{}.meta", self.paths.basename));
        let mut rows = Vec::with_capacity(instances.len());
        for (i, overrides) in instances.iter().enumerate() {
            let instance = i + 1;
            let outcome = self.run_instance(&root, instance, overrides).map_err(|e| e.to_string());
            if let Err(msg) = &outcome {
                log::error!("instance {instance} failed: {msg}");
            }
            rows.push(MetaRow { instance, outcome });
        }
        let summary = MetaSummary { names: self.roi.names(), rows };
        let path = root.join("summary.txt");
        fs::write(&path, summary.to_text()).map_err(|e| SpotError::io(&path, e))?;
        Ok(summary)
    }

    fn run_instance(
        &self,
        root: &std::path::Path,
        instance: usize,
        overrides: &[(String, Value)],
    ) -> Result<(ConfigRecord, u64)> {
        let dir = root.join(instance.to_string());
        fs::create_dir_all(&dir).map_err(|e| SpotError::io(&dir, e))?;
        let mut apd = self.apd.clone();
        for (k, v) in overrides {
            apd.set(k.clone(), v.clone());
        }
        let paths = ProjectPaths::new(dir, self.paths.basename.clone());
        write_roi(&self.roi, &paths.roi())?;
        fs::write(paths.apd(), apd.to_text()).map_err(|e| SpotError::io(paths.apd(), e))?;
        let sub = Project { conf: self.conf.clone(), paths, roi: self.roi.clone(), apd };
        let state = sub.auto_task()?;
        let best = state.best().cloned().ok_or_else(|| SpotError::invalid("no results"))?;
        Ok((best, state.evals_used))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_lines() {
        let got = parse_instances("# starts\nx0 = (1, 2); maxit = 10\n\nx0 = (3, 4)\n").unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0][1], ("maxit".to_string(), Value::Num(10.0)));
        assert_eq!(got[1][0].1, Value::Vector(vec![3.0, 4.0]));
        assert!(parse_instances("x0 (1, 2)\n").is_err());
    }
}
