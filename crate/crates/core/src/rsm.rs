//! Response-surface analysis of a second-order model in coded units:
//! stationary point, eigenanalysis, ridge (steepest-descent) path and
//! canonical path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SpotError};
use crate::param::RegionOfInterest;

/// Eigenvalues with magnitude at or below this (relative to the largest)
/// count as zero.
const EIGEN_ZERO: f64 = 1e-8;

/// `y = b0 + b'x + x'Bx` over coded inputs. `B` holds the pure quadratic
/// coefficients on the diagonal and half of each interaction coefficient off
/// the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub b0: f64,
    pub b: DVector<f64>,
    pub bmat: DMatrix<f64>,
    /// Region whose coded units the coefficients refer to.
    pub roi: RegionOfInterest,
}

impl QuadraticModel {
    pub fn new(b0: f64, b: Vec<f64>, bmat: DMatrix<f64>, roi: RegionOfInterest) -> Result<Self> {
        let n = roi.dim();
        if b.len() != n {
            return Err(SpotError::Dimension { expected: n, got: b.len() });
        }
        if bmat.nrows() != n || bmat.ncols() != n {
            return Err(SpotError::Dimension { expected: n, got: bmat.nrows() });
        }
        let asym = (&bmat - bmat.transpose()).amax();
        if asym > 1e-12 * (1.0 + bmat.amax()) {
            return Err(SpotError::invalid("quadratic coefficient matrix is not symmetric"));
        }
        Ok(QuadraticModel {
            b0,
            b: DVector::from_vec(b),
            bmat,
            roi,
        })
    }

    /// Build from the usual regression coefficients: `linear[i]` for `x_i`,
    /// `pure[i]` for `x_i^2` and `interactions` as `(i, j, coef)` for `x_i x_j`.
    pub fn from_coefficients(
        b0: f64,
        linear: &[f64],
        pure: &[f64],
        interactions: &[(usize, usize, f64)],
        roi: RegionOfInterest,
    ) -> Result<Self> {
        let n = roi.dim();
        if pure.len() != n {
            return Err(SpotError::Dimension { expected: n, got: pure.len() });
        }
        let mut bmat = DMatrix::from_diagonal(&DVector::from_column_slice(pure));
        for &(i, j, c) in interactions {
            if i >= n || j >= n || i == j {
                return Err(SpotError::invalid(format!("bad interaction index ({i}, {j})")));
            }
            bmat[(i, j)] += c / 2.0;
            bmat[(j, i)] += c / 2.0;
        }
        QuadraticModel::new(b0, linear.to_vec(), bmat, roi)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn is_first_order(&self) -> bool {
        self.bmat.iter().all(|&v| v == 0.0)
    }

    pub fn predict_coded(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        self.b0 + self.b.dot(&x) + x.dot(&(&self.bmat * &x))
    }

    pub fn gradient_coded(&self, x: &[f64]) -> DVector<f64> {
        let x = DVector::from_column_slice(x);
        &self.b + 2.0 * (&self.bmat * x)
    }

    /// Prediction at a point in original units.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_coded(&self.roi.to_coded(x)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryAnalysis {
    /// Coded stationary point; `None` when `B` is singular.
    pub point: Option<Vec<f64>>,
    /// Eigenvalues of `B`, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub classification: Classification,
}

impl StationaryAnalysis {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }
}

/// Eigendecomposition with eigenvalues sorted descending and each eigenvector
/// signed so that its first nonzero component is negative.
fn sorted_eigen(bmat: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(bmat.clone());
    let n = bmat.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().copied().find(|c| c.abs() > 1e-12) {
            if first > 0.0 {
                v = -v;
            }
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

pub fn stationary_point(model: &QuadraticModel) -> StationaryAnalysis {
    let (eigenvalues, eigenvectors) = sorted_eigen(&model.bmat);
    let scale = eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let singular = eigenvalues.iter().any(|v| v.abs() <= EIGEN_ZERO * scale);
    if singular {
        return StationaryAnalysis {
            point: None,
            eigenvalues,
            eigenvectors,
            classification: Classification::Degenerate,
        };
    }
    // x_s = -1/2 B^-1 b, through the eigenbasis: B^-1 = V diag(1/lambda) V'.
    let coords = eigenvectors.transpose() * &model.b;
    let scaled = DVector::from_iterator(
        coords.len(),
        coords.iter().zip(&eigenvalues).map(|(c, l)| -0.5 * c / l),
    );
    let xs = &eigenvectors * scaled;
    let classification = if eigenvalues.iter().all(|&v| v > 0.0) {
        Classification::Minimum
    } else if eigenvalues.iter().all(|&v| v < 0.0) {
        Classification::Maximum
    } else {
        Classification::Saddle
    };
    StationaryAnalysis {
        point: Some(xs.iter().copied().collect()),
        eigenvalues,
        eigenvectors,
        classification,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    /// Signed distance in coded units.
    pub dist: f64,
    pub coded: Vec<f64>,
    /// Original units, conformed to the region.
    pub original: Vec<f64>,
}

fn path_point(model: &QuadraticModel, dist: f64, coded: Vec<f64>) -> Result<PathPoint> {
    let original = model.roi.conform(&model.roi.from_coded(&coded)?)?;
    Ok(PathPoint {
        dist,
        coded,
        original,
    })
}

/// Ridge analysis from the coded origin: for each distance `i * step`
/// (`i = 1..=n_points`) the point minimizing the model on the sphere of that
/// radius, `x(mu) = -1/2 (B - mu I)^-1 b` with `mu` below the smallest
/// eigenvalue. With `B = 0` this is the ray along `-b`.
pub fn steepest_descent_path(
    model: &QuadraticModel,
    n_points: usize,
    step: f64,
) -> Result<Vec<PathPoint>> {
    if !(step > 0.0) {
        return Err(SpotError::invalid("path step must be positive"));
    }
    let bnorm = model.b.norm();
    if bnorm == 0.0 || !bnorm.is_finite() {
        return Err(SpotError::invalid("linear coefficients vanish: no descent direction"));
    }
    let (lambda, vectors) = sorted_eigen(&model.bmat);
    let n = lambda.len();
    let lmin = lambda[n - 1];
    let coords: Vec<f64> = (vectors.transpose() * &model.b).iter().copied().collect();

    let point_at = |mu: f64| -> DVector<f64> {
        let scaled = DVector::from_iterator(
            n,
            coords.iter().zip(&lambda).map(|(c, l)| -0.5 * c / (l - mu)),
        );
        &vectors * scaled
    };
    let norm_at = |mu: f64| -> f64 {
        coords
            .iter()
            .zip(&lambda)
            .map(|(c, l)| (0.5 * c / (l - mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    // Components along the smallest eigenvalue's eigenspace; when they vanish
    // the norm stays bounded as mu approaches lmin (the "hard case").
    let tol = EIGEN_ZERO * lambda.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let min_space: Vec<usize> = (0..n).filter(|&i| lambda[i] - lmin <= tol).collect();
    let min_coef = min_space.iter().map(|&i| coords[i].powi(2)).sum::<f64>().sqrt();
    let hard_case = min_coef <= 1e-12 * bnorm;

    (1..=n_points)
        .map(|i| {
            let dist = i as f64 * step;
            let x = if hard_case {
                hard_case_point(&coords, &lambda, &vectors, &min_space, lmin, dist)
                    .unwrap_or_else(|| point_at(solve_mu(&norm_at, lmin, dist, bnorm)))
            } else {
                point_at(solve_mu(&norm_at, lmin, dist, bnorm))
            };
            path_point(model, dist, x.iter().copied().collect())
        })
        .collect()
}

/// Bisection for `|x(mu)| = dist` on `mu < lmin`; the norm increases
/// monotonically in `mu` there.
fn solve_mu(norm_at: &dyn Fn(f64) -> f64, lmin: f64, dist: f64, bnorm: f64) -> f64 {
    // |x(mu)| <= |b| / (2 (lmin - mu)), so this bracket has norm <= dist.
    let mut lo = lmin - bnorm / (2.0 * dist) - 1.0;
    while norm_at(lo) > dist {
        lo = lmin - 2.0 * (lmin - lo);
    }
    let mut hi = lmin;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(mid) < dist {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn hard_case_point(
    coords: &[f64],
    lambda: &[f64],
    vectors: &DMatrix<f64>,
    min_space: &[usize],
    lmin: f64,
    dist: f64,
) -> Option<DVector<f64>> {
    let n = lambda.len();
    let limit = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            if min_space.contains(&i) {
                0.0
            } else {
                -0.5 * coords[i] / (lambda[i] - lmin)
            }
        }),
    );
    let r = limit.norm();
    if r >= dist {
        return None;
    }
    let mut y = limit;
    y[min_space[0]] = (dist * dist - r * r).sqrt();
    let v = vectors * y;
    Some(v)
}

/// Points `x_s + dist * v` through the stationary point along the unit
/// eigenvector `v` of the most negative eigenvalue, for
/// `dist = -n_points*step, ..., 0, ..., n_points*step`.
pub fn canonical_path(
    model: &QuadraticModel,
    n_points: usize,
    step: f64,
) -> Result<Vec<PathPoint>> {
    if !(step > 0.0) {
        return Err(SpotError::invalid("path step must be positive"));
    }
    let analysis = stationary_point(model);
    let xs = analysis
        .point
        .clone()
        .ok_or_else(|| SpotError::invalid("degenerate model: no stationary point"))?;
    let last = analysis.eigenvalues.len() - 1;
    if analysis.eigenvalues[last] >= 0.0 {
        return Err(SpotError::invalid("no negative eigenvalue: no descending ridge"));
    }
    let v = analysis.eigenvector(last);
    let k = n_points as i64;
    (-k..=k)
        .map(|i| {
            let dist = i as f64 * step;
            let coded: Vec<f64> = xs.iter().zip(&v).map(|(x, d)| x + dist * d).collect();
            path_point(model, dist, coded)
        })
        .collect()
}
