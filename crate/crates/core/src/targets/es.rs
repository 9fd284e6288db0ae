use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SpotError};
use crate::targets::OptimResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsParams {
    /// Offspring evaluations after the start point.
    pub budget: usize,
    pub sigma0: f64,
    /// Step-size adaptation factor, `> 1`.
    pub a: f64,
    /// Iterations per adaptation window.
    pub g: usize,
}

/// Step size after a window with `successes` improvements in `g` trials:
/// larger above a 1/5 success rate, smaller below, unchanged at exactly 1/5.
pub fn adapt_sigma(sigma: f64, successes: usize, g: usize, a: f64) -> f64 {
    match (5 * successes).cmp(&g) {
        std::cmp::Ordering::Greater => sigma * a,
        std::cmp::Ordering::Less => sigma / a,
        std::cmp::Ordering::Equal => sigma,
    }
}

/// (1+1)-ES with isotropic Gaussian mutation and the 1/5 success rule. An
/// offspring replaces the parent only if strictly better.
pub fn es_optimize<F, R>(mut f: F, x0: &[f64], params: &EsParams, rng: &mut R) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    if params.budget == 0 {
        return Err(SpotError::invalid("budget must be at least 1"));
    }
    if !(params.sigma0 > 0.0) || !params.sigma0.is_finite() {
        return Err(SpotError::invalid(format!("sigma0 must be positive, got {}", params.sigma0)));
    }
    if !(params.a > 1.0) || !params.a.is_finite() {
        return Err(SpotError::invalid(format!("adaptation factor must exceed 1, got {}", params.a)));
    }
    if params.g == 0 {
        return Err(SpotError::invalid("window g must be at least 1"));
    }
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut sigma = params.sigma0;
    let mut successes = 0;
    for it in 1..=params.budget {
        let y: Vec<f64> = x
            .iter()
            .map(|xi| {
                let z: f64 = StandardNormal.sample(rng);
                xi + sigma * z
            })
            .collect();
        let fy = f(&y)?;
        if fy < fx {
            x = y;
            fx = fy;
            successes += 1;
        }
        if it % params.g == 0 {
            sigma = adapt_sigma(sigma, successes, params.g, params.a);
            successes = 0;
        }
    }
    Ok(OptimResult { value: fx, point: x, evaluations: params.budget + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SpotRng;
    use crate::targets::sphere;
    use rand::SeedableRng;

    #[test]
    fn one_fifth_rule() {
        assert_eq!(adapt_sigma(2.0, 2, 10, 1.5), 2.0);
        assert_eq!(adapt_sigma(2.0, 3, 10, 1.5), 3.0);
        assert_eq!(adapt_sigma(3.0, 1, 10, 1.5), 2.0);
        assert_eq!(adapt_sigma(1.0, 0, 1, 2.0), 0.5);
    }

    #[test]
    fn converges_on_sphere() {
        let x0 = [20.0, -15.0, 30.0];
        let f0 = sphere(&x0).unwrap();
        let p = EsParams { budget: 1000, sigma0: 1.0, a: 1.22, g: 15 };
        for s in 0..10 {
            let r = es_optimize(sphere, &x0, &p, &mut SpotRng::seed_from_u64(s)).unwrap();
            assert!(r.value < f0 / 100.0, "seed {s}: {}", r.value);
        }
        let a = es_optimize(sphere, &x0, &p, &mut SpotRng::seed_from_u64(3)).unwrap();
        let b = es_optimize(sphere, &x0, &p, &mut SpotRng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_settings() {
        let mut r = SpotRng::seed_from_u64(0);
        let p = EsParams { budget: 10, sigma0: 1.0, a: 1.5, g: 5 };
        assert!(es_optimize(sphere, &[1.0], &EsParams { a: 1.0, ..p }, &mut r).is_err());
        assert!(es_optimize(sphere, &[1.0], &EsParams { sigma0: 0.0, ..p }, &mut r).is_err());
        assert!(es_optimize(sphere, &[1.0], &EsParams { budget: 0, ..p }, &mut r).is_err());
        assert!(es_optimize(sphere, &[1.0], &EsParams { g: 0, ..p }, &mut r).is_err());
    }
}
