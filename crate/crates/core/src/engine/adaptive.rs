//! Adaptive region of interest: alternating orientation and recalibration
//! phases driven by a response surface.

use std::collections::HashSet;

use crate::design::{ccd_coded, lhs_points, point_key};
use crate::error::Result;
use crate::model::{propose_candidates, LinearModel, Surrogate};
use crate::param::RegionOfInterest;
use crate::rng::{purpose, step_stream};
use crate::rsm::{canonical_path, steepest_descent_path};

/// Radius below this fraction of the smallest actual half-range restarts the
/// search.
pub const RESTART_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptivePhase {
    Orientation,
    Recalibration,
}

impl AdaptivePhase {
    /// Odd steps orient, even steps recalibrate.
    pub fn for_step(step: u32) -> Self {
        if step % 2 == 1 {
            AdaptivePhase::Orientation
        } else {
            AdaptivePhase::Recalibration
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSettings {
    pub path_points: usize,
    pub path_step: f64,
    pub canonical: bool,
    /// Random samples scored when no path exists.
    pub samples: usize,
    pub new_size: usize,
    pub restart_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub phase: AdaptivePhase,
    /// Actual region of interest after this step.
    pub roi: RegionOfInterest,
    pub candidates: Vec<Vec<f64>>,
    pub restarted: bool,
}

/// Distance from `center` to the nearest border of `aroi`, or of `roi` when
/// the center lies outside `aroi`.
pub fn recalibration_radius(roi: &RegionOfInterest, aroi: &RegionOfInterest, center: &[f64]) -> f64 {
    let frame = if aroi.contains(center) { aroi } else { roi };
    frame
        .params()
        .iter()
        .zip(center)
        .map(|(p, &x)| (x - p.low).min(p.high - x))
        .fold(f64::INFINITY, f64::min)
}

/// One step of the adaptive procedure for sequential step `step`.
///
/// Orientation proposes the descent path of `model` (fitted in coded units
/// of `aroi`), or its best sampled points when no path exists.
/// Recalibration centers a new central composite design on `best` with the
/// radius of [`recalibration_radius`]; a radius below [`RESTART_FRACTION`]
/// of the smallest half-range, or a missing model during orientation,
/// restarts with a Latin hypercube over the whole `roi`. Both phases add one
/// point proposed by `tree` over `roi`.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_roi_step(
    step: u32,
    roi: &RegionOfInterest,
    aroi: &RegionOfInterest,
    model: Option<&LinearModel>,
    tree: Option<&dyn Surrogate>,
    best: &[f64],
    settings: &AdaptiveSettings,
    exclude: &[Vec<f64>],
) -> Result<AdaptiveOutcome> {
    let phase = AdaptivePhase::for_step(step);
    let mut new_roi = aroi.clone();
    let mut restarted = false;
    let raw = match (phase, model) {
        (AdaptivePhase::Orientation, Some(m)) => {
            let path = if settings.canonical {
                canonical_path(&m.quadratic, settings.path_points, settings.path_step)
            } else {
                steepest_descent_path(&m.quadratic, settings.path_points, settings.path_step)
            };
            match path {
                Ok(points) => points
                    .into_iter()
                    .map(|p| roi.conform(&p.original))
                    .collect::<Result<Vec<_>>>()?,
                Err(e) => {
                    log::info!("step {step}: {e}; using the best sampled points instead");
                    let mut rng = step_stream(settings.seed, step, purpose::CANDIDATES);
                    let d = settings.new_size.min(settings.samples);
                    propose_candidates(m, aroi, settings.samples, d, exclude, &mut rng)?
                }
            }
        }
        (AdaptivePhase::Orientation, None) => {
            restarted = true;
            Vec::new()
        }
        (AdaptivePhase::Recalibration, _) => {
            let radius = recalibration_radius(roi, aroi, best);
            let smallest = aroi
                .params()
                .iter()
                .map(|p| p.half_range())
                .fold(f64::INFINITY, f64::min);
            if radius < RESTART_FRACTION * smallest {
                restarted = true;
                Vec::new()
            } else {
                let low: Vec<f64> = best.iter().map(|x| x - radius).collect();
                let high: Vec<f64> = best.iter().map(|x| x + radius).collect();
                new_roi = roi.with_bounds(&low, &high)?;
                let t = new_roi.coded()?;
                ccd_coded(roi.dim())
                    .iter()
                    .map(|c| roi.conform(&t.from_coded(c)?))
                    .collect::<Result<Vec<_>>>()?
            }
        }
    };
    let raw = if restarted {
        log::info!("step {step}: restarting with a Latin hypercube over the full region");
        new_roi = roi.clone();
        let mut rng = step_stream(settings.seed, step, purpose::RESTART);
        lhs_points(roi, settings.restart_size, &mut rng)?
    } else {
        raw
    };

    let mut seen: HashSet<Vec<u64>> = exclude.iter().map(|p| point_key(p)).collect();
    let mut candidates: Vec<Vec<f64>> = raw.into_iter().filter(|p| seen.insert(point_key(p))).collect();
    if let Some(tree) = tree {
        let taken: Vec<Vec<f64>> = exclude.iter().chain(&candidates).cloned().collect();
        let mut rng = step_stream(settings.seed, step, purpose::TREE_CANDIDATE);
        candidates.extend(propose_candidates(tree, roi, settings.samples.max(1), 1, &taken, &mut rng)?);
    }
    Ok(AdaptiveOutcome { phase, roi: new_roi, candidates, restarted })
}
