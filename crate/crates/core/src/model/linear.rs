use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SpotError};
use crate::model::{Dataset, Surrogate};
use crate::param::{CodedTransform, RegionOfInterest};
use crate::rsm::QuadraticModel;

/// Term set of a polynomial response surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelOrder {
    FirstOrder,
    TwoWayInteraction,
    PureQuadratic,
    SecondOrder,
}

impl ModelOrder {
    pub fn has_interactions(self) -> bool {
        matches!(self, ModelOrder::TwoWayInteraction | ModelOrder::SecondOrder)
    }

    pub fn has_squares(self) -> bool {
        matches!(self, ModelOrder::PureQuadratic | ModelOrder::SecondOrder)
    }

    /// Number of coefficients, intercept included.
    pub fn n_coefficients(self, n: usize) -> usize {
        let mut p = 1 + n;
        if self.has_interactions() {
            p += n * (n - 1) / 2;
        }
        if self.has_squares() {
            p += n;
        }
        p
    }

    /// Orders from richest to simplest. Pure quadratic comes before two-way
    /// interaction when both have the same size.
    fn by_richness(n: usize) -> Vec<ModelOrder> {
        let mut orders = vec![
            ModelOrder::SecondOrder,
            ModelOrder::PureQuadratic,
            ModelOrder::TwoWayInteraction,
            ModelOrder::FirstOrder,
        ];
        orders.sort_by_key(|o| std::cmp::Reverse(o.n_coefficients(n)));
        orders
    }

    fn basis(self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut row = Vec::with_capacity(self.n_coefficients(n));
        row.push(1.0);
        row.extend_from_slice(x);
        if self.has_interactions() {
            for i in 0..n {
                for j in i + 1..n {
                    row.push(x[i] * x[j]);
                }
            }
        }
        if self.has_squares() {
            row.extend(x.iter().map(|v| v * v));
        }
        row
    }
}

/// Least-squares polynomial in coded units.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub order: ModelOrder,
    /// Coefficients in basis order: intercept, linear terms, interactions
    /// `(i < j)`, squares.
    pub coefficients: Vec<f64>,
    pub quadratic: QuadraticModel,
    transform: CodedTransform,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.transform.to_coded(x) {
            Ok(c) => self.quadratic.predict_coded(&c),
            Err(_) => f64::NAN,
        }
    }

    /// Basis matrix of `coded` rows for this model's term set.
    pub fn design_matrix(&self, coded: &[Vec<f64>]) -> DMatrix<f64> {
        design_matrix(self.order, coded)
    }
}

impl Surrogate for LinearModel {
    fn predict(&self, x: &[f64]) -> f64 {
        LinearModel::predict(self, x)
    }
}

fn design_matrix(order: ModelOrder, coded: &[Vec<f64>]) -> DMatrix<f64> {
    let p = order.n_coefficients(coded.first().map_or(0, Vec::len));
    let rows: Vec<f64> = coded.iter().flat_map(|x| order.basis(x)).collect();
    DMatrix::from_row_slice(coded.len(), p, &rows)
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10;
    if smax == 0.0 || svd.rank(tol) < x.ncols() {
        return None;
    }
    svd.solve(y, tol).ok()
}

/// Fit the richest response surface the data supports.
///
/// Inputs are mapped to coded units of `roi`. An order with `p` coefficients
/// is eligible when the data has at least `p + 1` rows and a full-rank basis;
/// if no order qualifies, exactly `p` rows are accepted with a warning.
pub fn fit_linear(data: &Dataset, roi: &RegionOfInterest) -> Result<LinearModel> {
    data.validate()?;
    let n = roi.dim();
    if data.dim() != n && !data.is_empty() {
        return Err(SpotError::Dimension { expected: n, got: data.dim() });
    }
    let m = data.len();
    if m < n + 1 {
        return Err(SpotError::Fit(format!(
            "response surface needs at least {} observations, got {m}",
            n + 1
        )));
    }
    let transform = roi.coded()?;
    let coded = data
        .x
        .iter()
        .map(|x| transform.to_coded(x))
        .collect::<Result<Vec<_>>>()?;
    let y = DVector::from_column_slice(&data.y);

    let orders = ModelOrder::by_richness(n);
    for margin in [1, 0] {
        for &order in &orders {
            let p = order.n_coefficients(n);
            if m < p + margin {
                continue;
            }
            let xm = design_matrix(order, &coded);
            let Some(beta) = least_squares(&xm, &y) else {
                log::debug!("{order:?} basis is rank deficient, trying a simpler model");
                continue;
            };
            if margin == 0 {
                log::warn!("{order:?} model fitted without residual degrees of freedom");
            }
            let quadratic = to_quadratic(order, beta.as_slice(), roi.clone())?;
            return Ok(LinearModel {
                order,
                coefficients: beta.iter().copied().collect(),
                quadratic,
                transform,
            });
        }
    }
    Err(SpotError::Fit("no response surface order has a full-rank basis".into()))
}

fn to_quadratic(order: ModelOrder, beta: &[f64], roi: RegionOfInterest) -> Result<QuadraticModel> {
    let n = roi.dim();
    let linear = &beta[1..=n];
    let mut idx = n + 1;
    let mut interactions = Vec::new();
    if order.has_interactions() {
        for i in 0..n {
            for j in i + 1..n {
                interactions.push((i, j, beta[idx]));
                idx += 1;
            }
        }
    }
    let pure = if order.has_squares() {
        beta[idx..idx + n].to_vec()
    } else {
        vec![0.0; n]
    };
    QuadraticModel::from_coefficients(beta[0], linear, &pure, &interactions, roi)
}
