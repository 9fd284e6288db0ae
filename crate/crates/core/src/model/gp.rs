use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::design::point_key;
use crate::error::{Result, SpotError};
use crate::model::{Dataset, Surrogate};
use crate::param::{CodedTransform, RegionOfInterest};

const LOG_THETA_MIN: f64 = -3.0;
const LOG_THETA_MAX: f64 = 3.0;
const GRID: usize = 7;
const REFINE_PASSES: u32 = 2;
const MAX_SWEEPS: usize = 10;

/// Kriging with a constant mean and an anisotropic squared-exponential
/// correlation on coded inputs. `predict` is the posterior mean.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    transform: CodedTransform,
    x: Vec<Vec<f64>>,
    theta: Vec<f64>,
    mean: f64,
    sigma2: f64,
    nugget: f64,
    /// `(R + nugget I)^-1 (y - mean)`.
    alpha: Vec<f64>,
}

impl GaussianProcess {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let Ok(c) = self.transform.to_coded(x) else {
            return f64::NAN;
        };
        self.mean
            + self
                .x
                .iter()
                .zip(&self.alpha)
                .map(|(xi, a)| a * correlation(&self.theta, xi, &c))
                .sum::<f64>()
    }
}

impl Surrogate for GaussianProcess {
    fn predict(&self, x: &[f64]) -> f64 {
        GaussianProcess::predict(self, x)
    }
}

fn correlation(theta: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = theta
        .iter()
        .zip(a.iter().zip(b))
        .map(|(t, (u, v))| t * (u - v) * (u - v))
        .sum();
    (-d).exp()
}

struct Solved {
    chol: Cholesky<f64, Dyn>,
    mean: f64,
    sigma2: f64,
    loglik: f64,
}

/// Profile likelihood at fixed `theta`, with mean and variance at their
/// generalized least squares estimates. `None` if the correlation matrix is
/// not positive definite.
fn solve(x: &[Vec<f64>], y: &DVector<f64>, theta: &[f64], nugget: f64) -> Option<Solved> {
    let m = x.len();
    let r = DMatrix::from_fn(m, m, |i, j| {
        correlation(theta, &x[i], &x[j]) + if i == j { nugget } else { 0.0 }
    });
    let chol = Cholesky::new(r)?;
    let ones = DVector::from_element(m, 1.0);
    let ri_one = chol.solve(&ones);
    let ri_y = chol.solve(y);
    let denom = ones.dot(&ri_one);
    if !(denom > 0.0) {
        return None;
    }
    let mean = ones.dot(&ri_y) / denom;
    let resid = y - DVector::from_element(m, mean);
    let sigma2 = resid.dot(&chol.solve(&resid)) / m as f64;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let loglik = -0.5 * (m as f64 * sigma2.max(f64::MIN_POSITIVE).ln() + log_det);
    if !loglik.is_finite() || !sigma2.is_finite() {
        return None;
    }
    Some(Solved { chol, mean, sigma2, loglik })
}

fn prepare(data: &Dataset, nugget: f64, roi: &RegionOfInterest) -> Result<(CodedTransform, Vec<Vec<f64>>)> {
    data.validate()?;
    if data.len() < 2 {
        return Err(SpotError::Fit(format!(
            "Gaussian process needs at least 2 observations, got {}",
            data.len()
        )));
    }
    if data.dim() != roi.dim() {
        return Err(SpotError::Dimension { expected: roi.dim(), got: data.dim() });
    }
    if !(nugget >= 0.0) || !nugget.is_finite() {
        return Err(SpotError::invalid(format!("nugget must be finite and non-negative, got {nugget}")));
    }
    if nugget == 0.0 {
        let mut keys: Vec<_> = data.x.iter().map(|x| point_key(x)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(SpotError::Fit(
                "duplicate inputs need a positive nugget".into(),
            ));
        }
    }
    let transform = roi.coded()?;
    let coded = data
        .x
        .iter()
        .map(|x| transform.to_coded(x))
        .collect::<Result<Vec<_>>>()?;
    Ok((transform, coded))
}

fn finish(
    transform: CodedTransform,
    x: Vec<Vec<f64>>,
    y: &DVector<f64>,
    theta: Vec<f64>,
    nugget: f64,
    s: Solved,
) -> GaussianProcess {
    let resid = y - DVector::from_element(y.len(), s.mean);
    let alpha = s.chol.solve(&resid).iter().copied().collect();
    GaussianProcess { transform, x, theta, mean: s.mean, sigma2: s.sigma2, nugget, alpha }
}

fn not_pd(nugget: f64) -> SpotError {
    SpotError::Fit(format!(
        "correlation matrix is not positive definite with nugget {nugget}; use a larger nugget"
    ))
}

/// Fit with fixed correlation parameters `theta` (one per dimension).
pub fn fit_gp_with_theta(
    data: &Dataset,
    nugget: f64,
    roi: &RegionOfInterest,
    theta: &[f64],
) -> Result<GaussianProcess> {
    let (transform, x) = prepare(data, nugget, roi)?;
    if theta.len() != roi.dim() {
        return Err(SpotError::Dimension { expected: roi.dim(), got: theta.len() });
    }
    let y = DVector::from_column_slice(&data.y);
    let s = solve(&x, &y, theta, nugget).ok_or_else(|| not_pd(nugget))?;
    Ok(finish(transform, x, &y, theta.to_vec(), nugget, s))
}

/// Fit by maximizing the concentrated log-likelihood over `log10 theta` in
/// `[-3, 3]`: equal-theta starts on a 7-point grid, coordinate sweeps on the
/// same grid, then refinement passes with the grid spacing divided by 3.
pub fn fit_gp(data: &Dataset, nugget: f64, roi: &RegionOfInterest) -> Result<GaussianProcess> {
    let (transform, x) = prepare(data, nugget, roi)?;
    let n = roi.dim();
    let y = DVector::from_column_slice(&data.y);
    let grid: Vec<f64> = (0..GRID)
        .map(|k| LOG_THETA_MIN + k as f64 * (LOG_THETA_MAX - LOG_THETA_MIN) / (GRID - 1) as f64)
        .collect();
    let eval = |lt: &[f64]| -> f64 {
        let theta: Vec<f64> = lt.iter().map(|v| 10f64.powf(*v)).collect();
        solve(&x, &y, &theta, nugget).map_or(f64::NEG_INFINITY, |s| s.loglik)
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    for &start in &grid {
        let mut cur = vec![start; n];
        let mut cur_ll = eval(&cur);
        if cur_ll == f64::NEG_INFINITY {
            continue;
        }
        let mut step = grid[1] - grid[0];
        for pass in 0..=REFINE_PASSES {
            if pass > 0 {
                step /= 3.0;
            }
            for _ in 0..MAX_SWEEPS {
                let mut improved = false;
                for i in 0..n {
                    let centre = cur[i];
                    for k in 0..GRID {
                        let v = if pass == 0 {
                            grid[k]
                        } else {
                            (centre + (k as f64 - 3.0) * step).clamp(LOG_THETA_MIN, LOG_THETA_MAX)
                        };
                        if v == cur[i] {
                            continue;
                        }
                        let mut cand = cur.clone();
                        cand[i] = v;
                        let ll = eval(&cand);
                        if ll > cur_ll {
                            cur = cand;
                            cur_ll = ll;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        if best.as_ref().is_none_or(|(_, b)| cur_ll > *b) {
            best = Some((cur, cur_ll));
        }
    }
    let (lt, _) = best.ok_or_else(|| not_pd(nugget))?;
    let theta: Vec<f64> = lt.iter().map(|v| 10f64.powf(*v)).collect();
    let s = solve(&x, &y, &theta, nugget).ok_or_else(|| not_pd(nugget))?;
    Ok(finish(transform, x, &y, theta, nugget, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::parse_roi;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine_data() -> (Dataset, RegionOfInterest) {
        let roi = parse_roi(&format!("X 0 {} FLOAT", 2.0 * PI)).unwrap();
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![2.0 * PI * i as f64 / 7.0]).collect();
        let y = x.iter().map(|p| p[0].sin()).collect();
        (Dataset::new(x, y).unwrap(), roi)
    }

    #[test]
    fn constant_response() {
        let roi = parse_roi("A 0 1 FLOAT\nB 0 1 FLOAT").unwrap();
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 0.8]];
        let gp = fit_gp(&Dataset::new(x, vec![2.5; 3]).unwrap(), 1e-8, &roi).unwrap();
        for p in [[0.5, 0.5], [0.0, 1.0], [0.9, 0.1]] {
            assert!((gp.predict(&p) - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolates_with_tiny_nugget() {
        let (d, roi) = sine_data();
        let gp = fit_gp(&d, 1e-10, &roi).unwrap();
        for (x, y) in d.x.iter().zip(&d.y) {
            assert!((gp.predict(x) - y).abs() < 1e-6);
        }
    }

    #[test]
    fn reconstructs_sine() {
        let (d, roi) = sine_data();
        let gp = fit_gp(&d, 1e-10, &roi).unwrap();
        // Dense oracle: 50 midpoints across the range.
        let worst = (0..50)
            .map(|k| (k as f64 + 0.5) * 2.0 * PI / 50.0)
            .map(|x| (gp.predict(&[x]) - x.sin()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.1, "max error {worst}");
    }

    #[test]
    fn duplicates_need_a_nugget() {
        let roi = parse_roi("A 0 1 FLOAT").unwrap();
        let d = Dataset::new(vec![vec![0.5], vec![0.5], vec![1.0]], vec![1.0, 2.0, 0.0]).unwrap();
        assert!(fit_gp(&d, 0.0, &roi).is_err());
        let gp = fit_gp(&d, 1e-2, &roi).unwrap();
        assert!(gp.predict(&[0.5]).is_finite());
        assert!(fit_gp(&Dataset::new(vec![vec![0.5]], vec![1.0]).unwrap(), 1e-8, &roi).is_err());
    }

    #[test]
    fn hand_computed_two_point_fit() {
        // Two points at coded -1 and 1 with theta 0.25: R = [[1, e^-1], [e^-1, 1]].
        // The GLS mean is the midpoint of the responses.
        let roi = parse_roi("A 0 2 FLOAT").unwrap();
        let d = Dataset::new(vec![vec![0.0], vec![2.0]], vec![1.0, 3.0]).unwrap();
        let gp = fit_gp_with_theta(&d, 0.0, &roi, &[0.25]).unwrap();
        let rho = (-1.0f64).exp();
        assert!((gp.mean() - 2.0).abs() < 1e-12);
        // alpha = R^-1 (-1, 1) = (-1, 1) / (1 - rho); at coded 0 both kernels are e^-0.25.
        assert!((gp.predict(&[1.0]) - 2.0).abs() < 1e-12);
        // At coded 0.5 the kernels are e^-(0.25 * 2.25) and e^-(0.25 * 0.25).
        let at_half = 2.0 + ((-0.0625f64).exp() - (-0.5625f64).exp()) / (1.0 - rho);
        assert!((gp.predict(&[1.5]) - at_half).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn larger_nugget_never_fits_training_data_better(
            ys in prop::collection::vec(-5.0f64..5.0, 6),
            theta in 0.1f64..10.0,
        ) {
            let roi = parse_roi("A 0 1 FLOAT").unwrap();
            let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
            let d = Dataset::new(x, ys).unwrap();
            let err = |g: f64| {
                let gp = fit_gp_with_theta(&d, g, &roi, &[theta]).unwrap();
                d.x.iter().zip(&d.y).map(|(p, v)| (gp.predict(p) - v).powi(2)).sum::<f64>()
            };
            let mut last = 0.0;
            for g in [1e-8, 1e-4, 1e-2, 1e-1, 1.0, 10.0] {
                let e = err(g);
                prop_assert!(e >= last - 1e-9, "nugget {} error {} < {}", g, e, last);
                last = e;
            }
        }
    }
}
