//! Algorithms that can be tuned, and the test functions they minimize.

mod es;
mod external;
mod sann;

use std::f64::consts::PI;
use std::time::Duration;

use rand::SeedableRng;

use crate::config::AlgorithmPlugin;
use crate::error::{Result, SpotError};
use crate::fileio::Apd;
use crate::rng::SpotRng;

pub use es::{es_optimize, EsParams};
pub use external::{external_run, substitute};
pub use sann::{sann_optimize, sann_temperature, SannParams};

/// Outcome of a single optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub value: f64,
    pub point: Vec<f64>,
    pub evaluations: usize,
}

/// Branin function; its three global minima have value `0.397887...`.
pub fn branin(x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(SpotError::Dimension { expected: 2, got: x.len() });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(SpotError::NonFinite("branin input".into()));
    }
    let (x1, x2) = (x[0], x[1]);
    let a = x2 - 5.1 * x1 * x1 / (4.0 * PI * PI) + 5.0 * x1 / PI - 6.0;
    Ok(a * a + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0)
}

pub fn sphere(x: &[f64]) -> Result<f64> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(SpotError::NonFinite("sphere input".into()));
    }
    Ok(x.iter().map(|v| v * v).sum())
}

#[derive(Debug, Clone, Copy)]
pub struct ObjectiveFunction {
    pub name: &'static str,
    /// `None` for functions defined in any dimension.
    pub dimension: Option<usize>,
    pub evaluate: fn(&[f64]) -> Result<f64>,
}

pub fn objective_by_name(name: &str) -> Result<ObjectiveFunction> {
    match name.to_ascii_lowercase().as_str() {
        "branin" => Ok(ObjectiveFunction { name: "branin", dimension: Some(2), evaluate: branin }),
        "sphere" => Ok(ObjectiveFunction { name: "sphere", dimension: None, evaluate: sphere }),
        _ => Err(SpotError::invalid(format!("unknown objective function '{name}'"))),
    }
}

/// The algorithm invoked for every run of a design row.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmRunner {
    Sann,
    Es,
    Branin,
    External { command: String, timeout: Duration },
}

impl AlgorithmRunner {
    pub fn from_plugin(plugin: AlgorithmPlugin, command: Option<&str>, timeout: Duration) -> Result<Self> {
        Ok(match plugin {
            AlgorithmPlugin::Sann => AlgorithmRunner::Sann,
            AlgorithmPlugin::Es => AlgorithmRunner::Es,
            AlgorithmPlugin::Branin => AlgorithmRunner::Branin,
            AlgorithmPlugin::External => AlgorithmRunner::External {
                command: command
                    .ok_or_else(|| SpotError::invalid("external algorithm needs a command"))?
                    .to_string(),
                timeout,
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmRunner::Sann => "sann",
            AlgorithmRunner::Es => "es",
            AlgorithmRunner::Branin => "branin",
            AlgorithmRunner::External { .. } => "external",
        }
    }

    /// One run of the algorithm. `Y` depends only on the arguments.
    pub fn run(&self, names: &[String], values: &[f64], apd: &Apd, seed: u64) -> Result<f64> {
        if names.len() != values.len() {
            return Err(SpotError::Dimension { expected: names.len(), got: values.len() });
        }
        match self {
            AlgorithmRunner::Sann => run_sann(names, values, apd, seed),
            AlgorithmRunner::Es => run_es(names, values, apd, seed),
            AlgorithmRunner::Branin => {
                if values.len() < 2 {
                    return Err(SpotError::Dimension { expected: 2, got: values.len() });
                }
                branin(&values[..2])
            }
            AlgorithmRunner::External { command, timeout } => {
                let params: Vec<(String, f64)> =
                    names.iter().cloned().zip(values.iter().copied()).collect();
                external_run(command, &params, apd, seed, *timeout)
            }
        }
    }
}

/// Value of a tuned parameter (matched case-insensitively) or of an APD key.
fn setting(names: &[String], values: &[f64], apd: &Apd, key: &str) -> Option<f64> {
    names
        .iter()
        .position(|n| n.eq_ignore_ascii_case(key))
        .map(|i| values[i])
        .or_else(|| {
            apd.entries()
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(key))
                .and_then(|(_, v)| v.as_f64())
        })
}

fn start_point(apd: &Apd, objective: &ObjectiveFunction) -> Result<Vec<f64>> {
    let x0 = match apd.get("x0") {
        Some(v) => v
            .as_vec()
            .ok_or_else(|| SpotError::invalid("APD key x0 must be a numeric vector"))?,
        None => vec![10.0, 10.0],
    };
    if let Some(n) = objective.dimension {
        if x0.len() != n {
            return Err(SpotError::Dimension { expected: n, got: x0.len() });
        }
    }
    Ok(x0)
}

fn apd_objective(apd: &Apd) -> Result<ObjectiveFunction> {
    objective_by_name(apd.get_str("f").unwrap_or("branin"))
}

fn apd_count(apd: &Apd, keys: &[&str], default: usize) -> Result<usize> {
    for key in keys {
        if let Some(v) = apd.get_f64(key) {
            if !(v >= 1.0) || v.fract() != 0.0 {
                return Err(SpotError::invalid(format!("APD key {key} must be a positive integer")));
            }
            return Ok(v as usize);
        }
    }
    Ok(default)
}

fn run_sann(names: &[String], values: &[f64], apd: &Apd, seed: u64) -> Result<f64> {
    let objective = apd_objective(apd)?;
    let x0 = start_point(apd, &objective)?;
    let temp = setting(names, values, apd, "temp").unwrap_or(10.0);
    let tmax = setting(names, values, apd, "tmax").unwrap_or(10.0).round().max(1.0) as usize;
    let parscale = match apd.get("parscale") {
        Some(v) => v
            .as_vec()
            .ok_or_else(|| SpotError::invalid("APD key parscale must be numeric"))?,
        None => vec![1.0; x0.len()],
    };
    let params = SannParams {
        maxit: apd_count(apd, &["maxit"], 250)?,
        temp,
        tmax,
        parscale,
    };
    let mut rng = SpotRng::seed_from_u64(seed);
    Ok(sann_optimize(objective.evaluate, &x0, &params, &mut rng)?.value)
}

fn run_es(names: &[String], values: &[f64], apd: &Apd, seed: u64) -> Result<f64> {
    let objective = apd_objective(apd)?;
    let x0 = start_point(apd, &objective)?;
    let g = setting(names, values, apd, "g").unwrap_or(x0.len() as f64 * 5.0).round().max(1.0) as usize;
    let params = EsParams {
        budget: apd_count(apd, &["steps", "maxit"], 1000)?,
        sigma0: setting(names, values, apd, "sigma0").unwrap_or(1.0),
        a: setting(names, values, apd, "a").unwrap_or(1.22),
        g,
    };
    let mut rng = SpotRng::seed_from_u64(seed);
    Ok(es_optimize(objective.evaluate, &x0, &params, &mut rng)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fileio::parse_apd;

    #[test]
    #[allow(clippy::approx_constant)]
    fn branin_minima() {
        for x in [[PI, 2.275], [3.0 * PI, 2.475], [-PI, 12.275]] {
            assert!((branin(&x).unwrap() - 0.397887).abs() < 1e-6);
        }
        for x in [[3.1416, 2.2750], [9.4248, 2.4750], [-3.1416, 12.2750]] {
            assert!((branin(&x).unwrap() - 0.39789).abs() < 1e-4);
        }
        // Hand evaluation at the origin: 36 + 10 (1 - 1/(8 pi)) + 10.
        let want = 36.0 + 10.0 * (1.0 - 1.0 / (8.0 * PI)) + 10.0;
        assert!((branin(&[0.0, 0.0]).unwrap() - want).abs() < 1e-12);
        assert!((branin(&[0.0, 0.0]).unwrap() - 55.602113).abs() < 1e-5);
        assert!(branin(&[f64::NAN, 0.0]).is_err());
        assert!(branin(&[1.0]).is_err());
    }

    #[test]
    fn branin_grid_lower_bound() {
        for i in 0..200 {
            for j in 0..200 {
                let x1 = -5.0 + 15.0 * i as f64 / 199.0;
                let x2 = 15.0 * j as f64 / 199.0;
                assert!(branin(&[x1, x2]).unwrap() >= 0.397887);
            }
        }
    }

    #[test]
    fn runners_are_deterministic() {
        let apd = parse_apd("x0 = (10, 10)\nmaxit = 100\n").unwrap();
        let names = vec!["TEMP".to_string(), "TMAX".to_string()];
        for r in [AlgorithmRunner::Sann, AlgorithmRunner::Es] {
            let a = r.run(&names, &[5.0, 3.0], &apd, 11).unwrap();
            let b = r.run(&names, &[5.0, 3.0], &apd, 11).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let y = AlgorithmRunner::Branin.run(&names, &[PI, 2.275], &apd, 0).unwrap();
        assert!((y - 0.397887).abs() < 1e-6);
    }

    #[test]
    fn runner_reads_apd_objective() {
        let apd = parse_apd("x0 = (3, 4, 0)\nmaxit = 50\nf = \"sphere\"\n").unwrap();
        let y = AlgorithmRunner::Sann.run(&[], &[], &apd, 1).unwrap();
        assert!(y <= 25.0);
        let bad = parse_apd("f = \"nope\"\n").unwrap();
        assert!(AlgorithmRunner::Sann.run(&[], &[], &bad, 1).is_err());
        let wrong_dim = parse_apd("x0 = (1, 2, 3)\n").unwrap();
        assert!(AlgorithmRunner::Sann.run(&[], &[], &wrong_dim, 1).is_err());
    }
}
