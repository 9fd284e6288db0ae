use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::error::{Result, SpotError};
use crate::model::tree::{build, RegressionTree, TreeParams};
use crate::model::{Dataset, Surrogate};
use crate::rng::SpotRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `max(1, n / 3)`.
    pub mtry: Option<usize>,
    pub min_node: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            mtry: None,
            min_node: 5,
            max_depth: 30,
            bootstrap: true,
        }
    }
}

/// Bagged regression trees; the prediction is the mean over trees.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

impl Surrogate for RandomForest {
    fn predict(&self, x: &[f64]) -> f64 {
        RandomForest::predict(self, x)
    }
}

/// Fit a forest. Per-tree seeds are drawn from `rng` in tree order before the
/// trees are grown in parallel, so the result does not depend on scheduling.
pub fn fit_forest<R: Rng>(data: &Dataset, params: &ForestParams, rng: &mut R) -> Result<RandomForest> {
    data.validate()?;
    if data.is_empty() {
        return Err(SpotError::Fit("cannot fit a forest to an empty dataset".into()));
    }
    if params.n_trees == 0 {
        return Err(SpotError::invalid("forest needs at least one tree"));
    }
    let n = data.dim();
    let mtry = params.mtry.unwrap_or((n / 3).max(1));
    if mtry == 0 || mtry > n {
        return Err(SpotError::invalid(format!(
            "mtry must lie in 1..={n}, got {mtry}"
        )));
    }
    let tp = TreeParams {
        min_node: params.min_node.max(1),
        max_depth: params.max_depth,
    };
    let m = data.len();
    let seeds: Vec<u64> = (0..params.n_trees).map(|_| rng.random()).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut r = SpotRng::seed_from_u64(s);
            let idx: Vec<usize> = if params.bootstrap {
                (0..m).map(|_| r.random_range(0..m)).collect()
            } else {
                (0..m).collect()
            };
            build(&data.x, &data.y, idx, tp, Some((&mut r, mtry)))
        })
        .collect();
    Ok(RandomForest { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fit_tree;

    fn data() -> Dataset {
        let x: Vec<Vec<f64>> = (0..80)
            .map(|i| vec![(i * 13 % 80) as f64 / 8.0, (i * 7 % 17) as f64])
            .collect();
        let y = x.iter().map(|p| (p[0] - 4.0).powi(2) + 0.2 * p[1]).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn same_seed_same_forest() {
        let p = ForestParams { n_trees: 40, ..Default::default() };
        let a = fit_forest(&data(), &p, &mut SpotRng::seed_from_u64(3)).unwrap();
        let b = fit_forest(&data(), &p, &mut SpotRng::seed_from_u64(3)).unwrap();
        let c = fit_forest(&data(), &p, &mut SpotRng::seed_from_u64(4)).unwrap();
        for x in [[1.0, 2.0], [5.5, 9.0], [9.0, 0.0]] {
            assert_eq!(a.predict(&x), b.predict(&x));
        }
        assert!([[1.0, 2.0], [5.5, 9.0]].iter().any(|x| a.predict(x) != c.predict(x)));
    }

    #[test]
    fn without_bagging_matches_a_single_tree() {
        let d = data();
        let p = ForestParams { n_trees: 5, mtry: Some(2), bootstrap: false, min_node: 2, max_depth: 30 };
        let f = fit_forest(&d, &p, &mut SpotRng::seed_from_u64(0)).unwrap();
        let t = fit_tree(&d, 2, 30).unwrap();
        for x in &d.x {
            assert!((f.predict(x) - t.predict(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_is_within_response_range() {
        let d = data();
        let f = fit_forest(&d, &ForestParams { n_trees: 50, ..Default::default() }, &mut SpotRng::seed_from_u64(1)).unwrap();
        let (lo, hi) = d.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for x in [[-5.0, 0.0], [3.0, 3.0], [50.0, 50.0]] {
            let v = f.predict(&x);
            assert!(v >= lo && v <= hi);
        }
    }

    #[test]
    fn bagging_beats_a_single_tree_on_noise() {
        use rand_distr::{Distribution, Normal};
        let truth = |p: &[f64]| p[0] * p[0] + 0.5 * p[1] * p[1];
        let grid: Vec<Vec<f64>> = (0..21)
            .flat_map(|i| (0..21).map(move |j| vec![-1.0 + i as f64 * 0.1, -1.0 + j as f64 * 0.1]))
            .collect();
        let mse = |m: &dyn Surrogate| {
            grid.iter().map(|p| (m.predict(p) - truth(p)).powi(2)).sum::<f64>() / grid.len() as f64
        };
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut wins = 0;
        for seed in 0..10 {
            let mut r = SpotRng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..200)
                .map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])
                .collect();
            let y = x.iter().map(|p| truth(p) + noise.sample(&mut r)).collect();
            let d = Dataset::new(x, y).unwrap();
            let f = fit_forest(&d, &ForestParams { n_trees: 200, ..Default::default() }, &mut r).unwrap();
            let t = fit_tree(&d, 5, 30).unwrap();
            if mse(&f) <= mse(&t) {
                wins += 1;
            }
        }
        assert!(wins >= 8, "forest won {wins} of 10");
    }

    #[test]
    fn mean_of_trees() {
        let d = data();
        let f = fit_forest(&d, &ForestParams { n_trees: 30, ..Default::default() }, &mut SpotRng::seed_from_u64(8)).unwrap();
        for x in &d.x {
            let m = f.trees().iter().map(|t| t.predict(x)).sum::<f64>() / 30.0;
            assert!((f.predict(x) - m).abs() < 1e-12);
        }
        let c = Dataset::new(d.x.clone(), vec![4.0; d.len()]).unwrap();
        let f = fit_forest(&c, &ForestParams { n_trees: 10, ..Default::default() }, &mut SpotRng::seed_from_u64(8)).unwrap();
        assert_eq!(f.predict(&[100.0, -3.0]), 4.0);
    }

    #[test]
    fn rejects_bad_mtry() {
        let p = ForestParams { mtry: Some(3), ..Default::default() };
        assert!(fit_forest(&data(), &p, &mut SpotRng::seed_from_u64(0)).is_err());
    }
}
