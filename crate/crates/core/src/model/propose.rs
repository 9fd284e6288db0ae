use std::collections::HashSet;

use rand::{Rng, SeedableRng};

use crate::design::{point_key, uniform_points};
use crate::error::{Result, SpotError};
use crate::model::Surrogate;
use crate::param::RegionOfInterest;
use crate::rng::SpotRng;

/// Sample `l` conformed points uniformly in `roi` and return the `d` with the
/// smallest prediction. Samples that repeat an earlier sample or any point in
/// `exclude` are dropped first; ties keep sample order.
pub fn propose_candidates<R: Rng + ?Sized>(
    model: &dyn Surrogate,
    roi: &RegionOfInterest,
    l: usize,
    d: usize,
    exclude: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if d > l {
        return Err(SpotError::invalid(format!(
            "cannot select {d} candidates from {l} samples"
        )));
    }
    let mut seen: HashSet<Vec<u64>> = exclude.iter().map(|p| point_key(p)).collect();
    let mut scored: Vec<(f64, Vec<f64>)> = uniform_points(roi, l, rng)?
        .into_iter()
        .filter(|p| seen.insert(point_key(p)))
        .map(|p| (model.predict(&p), p))
        .collect();
    // Stable sort, so equal predictions keep sample order.
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(scored.into_iter().take(d).map(|(_, p)| p).collect())
}

/// Each model proposes `ceil(d / models)` points from its own sample; the
/// lists are interleaved round-robin, deduplicated and cut to `d`.
///
/// With one model this is exactly [`propose_candidates`] on `rng`. Otherwise
/// each model gets a generator seeded from `rng` in model order.
pub fn combine_proposals<R: Rng + ?Sized>(
    models: &[&dyn Surrogate],
    roi: &RegionOfInterest,
    l: usize,
    d: usize,
    exclude: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    match models {
        [] => Err(SpotError::invalid("no models to propose from")),
        [m] => propose_candidates(*m, roi, l, d, exclude, rng),
        _ => {
            let each = d.div_ceil(models.len());
            let lists = models
                .iter()
                .map(|m| {
                    let mut r = SpotRng::seed_from_u64(rng.random());
                    propose_candidates(*m, roi, l, each, exclude, &mut r)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(d);
            for k in 0..each {
                for list in &lists {
                    if let Some(p) = list.get(k) {
                        if out.len() < d && seen.insert(point_key(p)) {
                            out.push(p.clone());
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fit_linear, Dataset};
    use crate::param::parse_roi;

    struct Constant;
    impl Surrogate for Constant {
        fn predict(&self, _: &[f64]) -> f64 {
            1.0
        }
    }

    struct Closure<F>(F);
    impl<F: Fn(&[f64]) -> f64 + Send + Sync> Surrogate for Closure<F> {
        fn predict(&self, x: &[f64]) -> f64 {
            (self.0)(x)
        }
    }

    fn roi() -> RegionOfInterest {
        parse_roi("X 0 10 FLOAT").unwrap()
    }

    #[test]
    fn constant_model_keeps_sample_order() {
        let samples = uniform_points(&roi(), 20, &mut SpotRng::seed_from_u64(5)).unwrap();
        let got = propose_candidates(&Constant, &roi(), 20, 4, &[], &mut SpotRng::seed_from_u64(5)).unwrap();
        assert_eq!(got, samples[..4].to_vec());
    }

    #[test]
    fn d_equal_l_is_a_sorted_sample() {
        let model = Closure(|x: &[f64]| -x[0]);
        let got = propose_candidates(&model, &roi(), 15, 15, &[], &mut SpotRng::seed_from_u64(1)).unwrap();
        assert_eq!(got.len(), 15);
        assert!(got.windows(2).all(|w| w[0][0] >= w[1][0]));
        assert!(propose_candidates(&model, &roi(), 3, 4, &[], &mut SpotRng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn fitted_quadratic_points_to_the_minimum() {
        let x: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64]).collect();
        let y = x.iter().map(|p| (p[0] - 3.0).powi(2)).collect();
        let m = fit_linear(&Dataset::new(x, y).unwrap(), &roi()).unwrap();
        for seed in 0..5 {
            let got = propose_candidates(&m, &roi(), 10_000, 5, &[], &mut SpotRng::seed_from_u64(seed)).unwrap();
            assert_eq!(got.len(), 5);
            assert!(got.iter().all(|p| (2.0..=4.0).contains(&p[0])), "{got:?}");
        }
    }

    #[test]
    fn excluded_and_integral_points() {
        let r = parse_roi("N 1 3 INT").unwrap();
        let model = Closure(|x: &[f64]| x[0]);
        let got = propose_candidates(&model, &r, 50, 3, &[vec![1.0]], &mut SpotRng::seed_from_u64(2)).unwrap();
        assert_eq!(got, vec![vec![2.0], vec![3.0]]);
    }

    #[test]
    fn combining_models() {
        let a = Closure(|x: &[f64]| x[0]);
        let b = Closure(|x: &[f64]| -x[0]);
        let got = combine_proposals(&[&a, &b], &roi(), 100, 2, &[], &mut SpotRng::seed_from_u64(0)).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got[0][0] < 1.0 && got[1][0] > 9.0);

        let single = combine_proposals(&[&a], &roi(), 100, 3, &[], &mut SpotRng::seed_from_u64(9)).unwrap();
        let direct = propose_candidates(&a, &roi(), 100, 3, &[], &mut SpotRng::seed_from_u64(9)).unwrap();
        assert_eq!(single, direct);
        assert!(combine_proposals(&[], &roi(), 10, 1, &[], &mut SpotRng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn identical_models_give_best_points() {
        let a = Closure(|x: &[f64]| (x[0] - 5.0).abs());
        let got = combine_proposals(&[&a, &a], &roi(), 200, 4, &[], &mut SpotRng::seed_from_u64(3)).unwrap();
        assert!(got.len() <= 4);
        // Each model's own 2 best are within the best 2 of its 200 draws, so
        // they all sit close to 5.
        assert!(got.iter().all(|p| (p[0] - 5.0).abs() < 0.5));
    }
}
