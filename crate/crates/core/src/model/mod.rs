//! Surrogate models fitted to tuning results, and candidate proposal by
//! sampling them.

mod forest;
mod gp;
mod linear;
mod propose;
mod tree;

use std::collections::BTreeMap;

use crate::config::MergeFunc;
use crate::error::{Result, SpotError};
use crate::fileio::ResultTable;

pub use forest::{fit_forest, ForestParams, RandomForest};
pub use gp::{fit_gp, fit_gp_with_theta, GaussianProcess};
pub use linear::{fit_linear, LinearModel, ModelOrder};
pub use propose::{combine_proposals, propose_candidates};
pub use tree::{fit_tree, RegressionTree, TreeNode, TreeParams};

/// Observations in original units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub config_ids: Option<Vec<u64>>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let d = Dataset {
            x,
            y,
            config_ids: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(SpotError::Dimension {
                expected: self.x.len(),
                got: self.y.len(),
            });
        }
        let n = self.dim();
        for row in &self.x {
            if row.len() != n {
                return Err(SpotError::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SpotError::NonFinite("dataset inputs".into()));
            }
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(SpotError::NonFinite("dataset outputs".into()));
        }
        Ok(())
    }
}

/// One row per result record, no aggregation.
pub fn raw_dataset(results: &ResultTable) -> Result<Dataset> {
    if results.is_empty() {
        return Err(SpotError::invalid("no results to build a dataset from"));
    }
    let d = Dataset {
        x: results.rows.iter().map(|r| r.values.clone()).collect(),
        y: results.rows.iter().map(|r| r.y).collect(),
        config_ids: Some(results.rows.iter().map(|r| r.config).collect()),
    };
    d.validate()?;
    Ok(d)
}

/// One row per configuration, `y` aggregated by `merge`. Rows are ordered by
/// configuration id.
pub fn merge_dataset(results: &ResultTable, merge: MergeFunc) -> Result<Dataset> {
    if results.is_empty() {
        return Err(SpotError::invalid("no results to build a dataset from"));
    }
    let mut groups: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &results.rows {
        groups
            .entry(r.config)
            .or_insert_with(|| (r.values.clone(), Vec::new()))
            .1
            .push(r.y);
    }
    let mut d = Dataset::default();
    let mut ids = Vec::new();
    for (id, (x, ys)) in groups {
        d.x.push(x);
        d.y.push(merge.apply(&ys));
        ids.push(id);
    }
    d.config_ids = Some(ids);
    d.validate()?;
    Ok(d)
}

pub fn merge_mean(results: &ResultTable) -> Result<Dataset> {
    merge_dataset(results, MergeFunc::Mean)
}

pub trait Surrogate: Send + Sync {
    /// Prediction at a point in original units.
    fn predict(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Tree,
    Forest,
    Gp,
}

#[derive(Debug, Clone)]
pub enum FittedModel {
    Linear(LinearModel),
    Tree(RegressionTree),
    Forest(RandomForest),
    Gp(GaussianProcess),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Linear(_) => ModelKind::Linear,
            FittedModel::Tree(_) => ModelKind::Tree,
            FittedModel::Forest(_) => ModelKind::Forest,
            FittedModel::Gp(_) => ModelKind::Gp,
        }
    }
}

impl Surrogate for FittedModel {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict(x),
            FittedModel::Tree(m) => m.predict(x),
            FittedModel::Forest(m) => m.predict(x),
            FittedModel::Gp(m) => m.predict(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fileio::ResultRecord;

    fn table(rows: &[(u64, f64, f64)]) -> ResultTable {
        ResultTable {
            names: vec!["A".into()],
            rows: rows
                .iter()
                .map(|&(config, x, y)| ResultRecord { y, values: vec![x], seed: 1, config, step: 0 })
                .collect(),
        }
    }

    #[test]
    fn merge_means_per_config() {
        let d = merge_mean(&table(&[(7, 1.0, 1.0), (7, 1.0, 3.0)])).unwrap();
        assert_eq!((d.len(), d.y[0]), (1, 2.0));
        let d = merge_mean(&table(&[(1, 1.0, 5.0), (2, 2.0, 6.0)])).unwrap();
        assert_eq!(d.y, vec![5.0, 6.0]);
        let d = merge_mean(&table(&[(3, 1.0, 0.4), (3, 1.0, 0.4), (3, 1.0, 4.0)])).unwrap();
        assert!((d.y[0] - 1.6).abs() < 1e-15);
        assert!(merge_mean(&table(&[])).is_err());
    }

    #[test]
    fn raw_keeps_every_row() {
        let d = raw_dataset(&table(&[(1, 1.0, 1.0), (1, 1.0, 2.0), (2, 3.0, 0.0)])).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.x[0], d.x[1]);
        assert_ne!(d.y[0], d.y[1]);
        assert!(raw_dataset(&table(&[])).is_err());
    }
}
