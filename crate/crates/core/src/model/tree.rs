use rand::seq::index;
use rand::Rng;

use crate::error::{Result, SpotError};
use crate::model::{Dataset, Surrogate};

/// Smallest SSE reduction that justifies a split.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// A node is split only if it holds at least `2 * min_node` observations,
    /// and both children keep at least `min_node`.
    pub min_node: usize,
    pub max_depth: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_node: 5,
            max_depth: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
        n: usize,
    },
    Split {
        feature: usize,
        /// Observations with `x[feature] < threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        value: f64,
        n: usize,
    },
}

impl TreeNode {
    pub fn value(&self) -> f64 {
        match *self {
            TreeNode::Leaf { value, .. } | TreeNode::Split { value, .. } => value,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            TreeNode::Leaf { n, .. } | TreeNode::Split { n, .. } => n,
        }
    }
}

/// CART regression tree with axis-aligned binary splits chosen to minimize
/// the summed within-node squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Index of the leaf that `x` falls into.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.leaf_index(x)].value()
    }
}

impl Surrogate for RegressionTree {
    fn predict(&self, x: &[f64]) -> f64 {
        RegressionTree::predict(self, x)
    }
}

pub fn fit_tree(data: &Dataset, min_node: usize, max_depth: usize) -> Result<RegressionTree> {
    data.validate()?;
    if data.is_empty() {
        return Err(SpotError::Fit("cannot fit a tree to an empty dataset".into()));
    }
    let params = TreeParams {
        min_node: min_node.max(1),
        max_depth,
    };
    let idx: Vec<usize> = (0..data.len()).collect();
    Ok(build(&data.x, &data.y, idx, params, None::<(&mut rand_chacha::ChaCha8Rng, usize)>))
}

/// Grow a tree on the rows `idx` (repeats allowed, as in a bootstrap
/// sample). With `features = Some((rng, mtry))` every split considers only
/// `mtry` columns drawn without replacement.
pub(crate) fn build<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    idx: Vec<usize>,
    params: TreeParams,
    mut features: Option<(&mut R, usize)>,
) -> RegressionTree {
    let n_features = x.first().map_or(0, Vec::len);
    let mut nodes = Vec::new();
    // (node slot, rows, depth)
    let mut stack = vec![(0usize, idx, 0usize)];
    nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
    while let Some((slot, rows, depth)) = stack.pop() {
        let n = rows.len();
        let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
        let splittable = n >= 2 * params.min_node && depth < params.max_depth;
        let split = if splittable {
            let cols: Vec<usize> = match features.as_mut() {
                Some((rng, mtry)) if *mtry < n_features => {
                    let mut c = index::sample(&mut **rng, n_features, *mtry).into_vec();
                    c.sort_unstable();
                    c
                }
                _ => (0..n_features).collect(),
            };
            best_split(x, y, &rows, mean, &cols, params.min_node)
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[i][feature] < threshold);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
                nodes.push(TreeNode::Leaf { value: 0.0, n: 0 });
                nodes[slot] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    value: mean,
                    n,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => nodes[slot] = TreeNode::Leaf { value: mean, n },
        }
    }
    RegressionTree { nodes }
}

/// Best `(feature, threshold)` over `cols`, or `None` if no admissible split
/// lowers the SSE by at least [`MIN_GAIN`]. Ties keep the first candidate in
/// column order, then threshold order.
fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    mean: f64,
    cols: &[usize],
    min_node: usize,
) -> Option<(usize, f64)> {
    let n = rows.len();
    // Centered responses keep the running sums well conditioned.
    let total_sq: f64 = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    let total: f64 = rows.iter().map(|&i| y[i] - mean).sum();
    let mut best: Option<(usize, f64, f64)> = None;
    let mut order = rows.to_vec();
    for &f in cols {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut sum_l = 0.0;
        for k in 0..n - 1 {
            sum_l += y[order[k]] - mean;
            let n_l = k + 1;
            let n_r = n - n_l;
            let (a, b) = (x[order[k]][f], x[order[k + 1]][f]);
            if a == b || n_l < min_node || n_r < min_node {
                continue;
            }
            let sum_r = total - sum_l;
            // SSE(children) = total_sq - sum_l^2/n_l - sum_r^2/n_r.
            let gain = sum_l * sum_l / n_l as f64 + sum_r * sum_r / n_r as f64
                - total * total / n as f64;
            if gain >= MIN_GAIN * (1.0 + total_sq) && best.is_none_or(|(_, _, g)| gain > g) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid > a { mid } else { b };
                best = Some((f, threshold, gain));
            }
        }
    }
    best.map(|(f, t, _)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_response_is_one_leaf() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let t = fit_tree(&Dataset::new(x, vec![3.5; 20]).unwrap(), 1, 30).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.predict(&[100.0]), 3.5);
    }

    /// Exhaustive scan over all thresholds, independent of the prefix-sum search.
    fn brute_force_root(x: &[f64], y: &[f64]) -> (f64, f64) {
        let sse = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
        };
        let mut xs = x.to_vec();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut best = (f64::INFINITY, f64::NAN);
        for w in xs.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let l: Vec<f64> = x.iter().zip(y).filter(|(a, _)| **a < t).map(|(_, b)| *b).collect();
            let r: Vec<f64> = x.iter().zip(y).filter(|(a, _)| **a >= t).map(|(_, b)| *b).collect();
            let s = sse(&l) + sse(&r);
            if s < best.0 {
                best = (s, t);
            }
        }
        best
    }

    #[test]
    fn step_function_root_split() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 + 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&v| if v < 5.0 { 0.0 } else { 1.0 }).collect();
        let data = Dataset::new(xs.iter().map(|&v| vec![v]).collect(), ys.clone()).unwrap();
        let t = fit_tree(&data, 1, 30).unwrap();
        let (_, oracle_t) = brute_force_root(&xs, &ys);
        match *t.root() {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!(threshold > 4.6 && threshold <= 5.1, "{threshold}");
                assert!((threshold - oracle_t).abs() < 1e-12);
            }
            ref other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(t.predict(&[1.0]), 0.0);
        assert_eq!(t.predict(&[9.0]), 1.0);
        assert_eq!(t.n_leaves(), 2);
    }

    #[test]
    fn leaves_hold_their_means() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i * 37 % 60) as f64, (i * 11 % 13) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|p| (p[0] / 7.0).sin() + 0.1 * p[1]).collect();
        let t = fit_tree(&Dataset::new(x.clone(), y.clone()).unwrap(), 3, 5).unwrap();
        let mut sums = vec![(0.0, 0usize); t.n_nodes()];
        for (p, v) in x.iter().zip(&y) {
            let leaf = t.leaf_index(p);
            sums[leaf].0 += v;
            sums[leaf].1 += 1;
        }
        let mut total = 0;
        for (i, (s, c)) in sums.iter().enumerate() {
            if let TreeNode::Leaf { value, n } = *t.node(i) {
                assert_eq!(n, *c);
                assert!(n >= 3);
                assert!((value - s / *c as f64).abs() < 1e-12);
                total += c;
            }
        }
        assert_eq!(total, 60);
    }

    #[test]
    fn depth_and_size_limits() {
        let x: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..32).map(|i| (i * i) as f64).collect();
        let data = Dataset::new(x, y).unwrap();
        assert_eq!(fit_tree(&data, 1, 0).unwrap().n_nodes(), 1);
        assert_eq!(fit_tree(&data, 1, 1).unwrap().n_leaves(), 2);
        assert_eq!(fit_tree(&data, 17, 30).unwrap().n_nodes(), 1);
        assert!(fit_tree(&Dataset::default(), 1, 3).is_err());
    }
}
