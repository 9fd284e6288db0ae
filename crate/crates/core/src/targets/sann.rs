use std::f64::consts::E;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SpotError};
use crate::targets::OptimResult;

#[derive(Debug, Clone, PartialEq)]
pub struct SannParams {
    pub maxit: usize,
    /// Starting temperature.
    pub temp: f64,
    /// Evaluations per temperature level.
    pub tmax: usize,
    /// Per-coordinate proposal scale.
    pub parscale: Vec<f64>,
}

/// Temperature at iteration `t >= 1`: `temp / ln(floor((t-1)/tmax) * tmax + e)`.
pub fn sann_temperature(temp: f64, tmax: usize, t: usize) -> f64 {
    let level = ((t.max(1) - 1) / tmax.max(1)) * tmax.max(1);
    temp / (level as f64 + E).ln()
}

/// Simulated annealing with a Gaussian proposal of scale `T(t) * parscale`
/// and Metropolis acceptance. Returns the best point ever visited after
/// exactly `maxit` proposals.
pub fn sann_optimize<F, R>(mut f: F, x0: &[f64], params: &SannParams, rng: &mut R) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    if params.maxit == 0 {
        return Err(SpotError::invalid("maxit must be at least 1"));
    }
    if !(params.temp > 0.0) || !params.temp.is_finite() {
        return Err(SpotError::invalid(format!("temperature must be positive, got {}", params.temp)));
    }
    if params.tmax == 0 {
        return Err(SpotError::invalid("tmax must be at least 1"));
    }
    if params.parscale.len() != x0.len() {
        return Err(SpotError::Dimension { expected: x0.len(), got: params.parscale.len() });
    }
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut best = (fx, x.clone());
    for t in 1..=params.maxit {
        let temp = sann_temperature(params.temp, params.tmax, t);
        let cand: Vec<f64> = x
            .iter()
            .zip(&params.parscale)
            .map(|(xi, s)| {
                let z: f64 = StandardNormal.sample(rng);
                xi + z * temp * s
            })
            .collect();
        let fc = f(&cand)?;
        // The uniform is drawn on every iteration so the stream does not
        // depend on which branch was taken.
        let u: f64 = rng.random();
        if fc <= fx || u < ((fx - fc) / temp).exp() {
            x = cand;
            fx = fc;
            if fx < best.0 {
                best = (fx, x.clone());
            }
        }
    }
    Ok(OptimResult {
        value: best.0,
        point: best.1,
        evaluations: params.maxit + 1,
    })
}
