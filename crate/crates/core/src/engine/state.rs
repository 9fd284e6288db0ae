use std::collections::BTreeMap;

use crate::config::MergeFunc;
use crate::error::{Result, SpotError};
use crate::fileio::{BestRecord, ResultTable};
use crate::param::RegionOfInterest;

/// One configuration as seen through the result file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRecord {
    pub config: u64,
    pub values: Vec<f64>,
    /// Completed runs.
    pub count: u64,
    /// Aggregate of the configuration's results.
    pub utility: f64,
    /// Step in which the configuration was first run.
    pub step: u32,
}

impl ConfigRecord {
    pub fn to_best(&self, step: u32) -> BestRecord {
        BestRecord {
            y: self.utility,
            values: self.values.clone(),
            count: self.count,
            config: self.config,
            step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningState {
    /// Configurations in ascending id order.
    pub population: Vec<ConfigRecord>,
    /// Repeat target of the latest step.
    pub k: u32,
    /// Latest step present in the results.
    pub step: u32,
    pub evals_used: u64,
    /// Actual region of interest.
    pub roi: RegionOfInterest,
}

impl TuningState {
    /// Rebuild the state from results. `k` follows the schedule
    /// `init_repeats + step`.
    pub fn from_results(
        results: &ResultTable,
        merge: MergeFunc,
        init_repeats: u32,
        roi: RegionOfInterest,
    ) -> Result<Self> {
        let mut groups: BTreeMap<u64, (Vec<f64>, Vec<f64>, u32)> = BTreeMap::new();
        for r in &results.rows {
            let g = groups
                .entry(r.config)
                .or_insert_with(|| (r.values.clone(), Vec::new(), r.step));
            if g.0 != r.values {
                return Err(SpotError::invalid(format!(
                    "config {} appears with different parameter values",
                    r.config
                )));
            }
            g.1.push(r.y);
            g.2 = g.2.min(r.step);
        }
        let population = groups
            .into_iter()
            .map(|(config, (values, ys, step))| ConfigRecord {
                config,
                values,
                count: ys.len() as u64,
                utility: merge.apply(&ys),
                step,
            })
            .collect();
        let step = results.rows.iter().map(|r| r.step).max().unwrap_or(0);
        Ok(TuningState {
            population,
            k: init_repeats + step,
            step,
            evals_used: results.len() as u64,
            roi,
        })
    }

    /// Configuration with the smallest utility; ties go to the lowest id.
    pub fn best(&self) -> Option<&ConfigRecord> {
        self.population
            .iter()
            .reduce(|a, b| if b.utility < a.utility { b } else { a })
    }

    pub fn get(&self, config: u64) -> Option<&ConfigRecord> {
        self.population.iter().find(|c| c.config == config)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.population.iter().map(|c| c.values.clone()).collect()
    }
}
