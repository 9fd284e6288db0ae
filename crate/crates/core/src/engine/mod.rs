//! The tuning loop: initial design, algorithm runs, sequential model-based
//! steps and their budget bookkeeping. All state lives in project files, so
//! every task can be run on its own.

mod adaptive;
mod meta;
mod state;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::config::{BestFrom, DesignPlugin, ModelPlugin, SpotConfig};
use crate::design::{
    assign_metadata, ccd_design, fractional_factorial_res3, lhs_design, lhs_points, point_key,
    DesignPoint, DesignTable,
};
use crate::error::{Result, SpotError};
use crate::fileio::{
    append_bst, append_res, parse_apd, read_des, read_res, read_roi, read_text, write_des, write_roi,
    Apd, ProjectPaths, ResultRecord, ResultTable,
};
use crate::model::{
    combine_proposals, fit_forest, fit_gp, fit_linear, fit_tree, merge_dataset, propose_candidates,
    raw_dataset, Dataset, ForestParams, Surrogate,
};
use crate::param::RegionOfInterest;
use crate::rng::{purpose, step_stream};
use crate::rsm::{canonical_path, steepest_descent_path};
use crate::targets::AlgorithmRunner;

pub use adaptive::{
    adaptive_roi_step, recalibration_radius, AdaptiveOutcome, AdaptivePhase, AdaptiveSettings,
    RESTART_FRACTION,
};
pub use meta::{parse_instances, MetaRow, MetaSummary};
pub use state::{ConfigRecord, TuningState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskKind {
    Init,
    Run,
    Seq,
    Rep,
    #[default]
    Auto,
    Meta,
}

impl FromStr for TaskKind {
    type Err = SpotError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "init" => Ok(TaskKind::Init),
            "run" => Ok(TaskKind::Run),
            "seq" => Ok(TaskKind::Seq),
            "rep" => Ok(TaskKind::Rep),
            "auto" => Ok(TaskKind::Auto),
            "meta" => Ok(TaskKind::Meta),
            _ => Err(SpotError::invalid(format!(
                "unknown task `{s}`; expected init, run, seq, rep, auto or meta"
            ))),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Init => "init",
            TaskKind::Run => "run",
            TaskKind::Seq => "seq",
            TaskKind::Rep => "rep",
            TaskKind::Auto => "auto",
            TaskKind::Meta => "meta",
        })
    }
}

/// A tuning project: settings, region of interest, problem design and the
/// location of its files.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub conf: SpotConfig,
    pub paths: ProjectPaths,
    pub roi: RegionOfInterest,
    pub apd: Apd,
}

fn resolve(dir: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn remove_if_exists(path: &Path) -> Result<()> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(SpotError::io(path, e)),
        _ => Ok(()),
    }
}

impl Project {
    pub fn new(conf: SpotConfig, paths: ProjectPaths, roi: RegionOfInterest, apd: Apd) -> Result<Self> {
        conf.validate()?;
        Ok(Project { conf, paths, roi, apd })
    }

    /// Load the project whose CONF file is `conf_path`, applying `key=value`
    /// overrides on top of the file.
    pub fn open(conf_path: &Path, overrides: &[String]) -> Result<Self> {
        let mut conf = crate::config::read_conf(&read_text(conf_path)?)?;
        for o in overrides {
            conf.apply_override(o)?;
        }
        let mut paths = ProjectPaths::from_conf(conf_path);
        if let Some(b) = &conf.basename {
            paths.basename = b.clone();
        }
        let roi_path = conf
            .roi_file
            .as_deref()
            .map_or_else(|| paths.roi(), |f| resolve(&paths.dir, f));
        let roi = read_roi(&roi_path)?;
        let apd = match conf.apd_file.as_deref() {
            Some(f) => parse_apd(&read_text(&resolve(&paths.dir, f))?)?,
            None if paths.apd().exists() => parse_apd(&read_text(&paths.apd())?)?,
            None => Apd::default(),
        };
        Project::new(conf, paths, roi, apd)
    }

    pub fn runner(&self) -> Result<AlgorithmRunner> {
        AlgorithmRunner::from_plugin(
            self.conf.algorithm,
            self.conf.command.as_deref(),
            Duration::from_secs_f64(self.conf.timeout_secs.max(0.0)),
        )
    }

    /// Results so far; a missing file is an empty table.
    pub fn results(&self) -> Result<ResultTable> {
        let path = self.paths.res();
        if !path.exists() {
            return Ok(ResultTable::new(self.roi.names()));
        }
        let mut t = read_res(&path)?;
        if t.names.is_empty() && t.rows.is_empty() {
            t.names = self.roi.names();
        }
        if t.names != self.roi.names() {
            return Err(SpotError::invalid(format!(
                "{} has columns {:?}, the region of interest has {:?}",
                path.display(),
                t.names,
                self.roi.names()
            )));
        }
        Ok(t)
    }

    pub fn design(&self) -> Result<DesignTable> {
        read_des(&self.paths.des(), &self.roi)
    }

    /// Actual region of interest: the persisted one in adaptive mode, the
    /// full region otherwise.
    pub fn actual_roi(&self) -> Result<RegionOfInterest> {
        let path = self.paths.aroi();
        if self.conf.use_adaptive_roi && path.exists() {
            let aroi = read_roi(&path)?;
            if aroi.names() != self.roi.names() {
                return Err(SpotError::invalid(format!(
                    "{} does not match the region of interest",
                    path.display()
                )));
            }
            Ok(aroi)
        } else {
            Ok(self.roi.clone())
        }
    }

    pub fn state(&self) -> Result<TuningState> {
        TuningState::from_results(
            &self.results()?,
            self.conf.merge,
            self.conf.init_repeats,
            self.actual_roi()?,
        )
    }

    /// Write the initial design and reset results, best file and actual ROI.
    pub fn init_task(&self) -> Result<DesignTable> {
        let mut rng = step_stream(self.conf.seed, 0, purpose::INIT_DESIGN);
        let table = match self.conf.init_design {
            DesignPlugin::Lhs => lhs_design(&self.roi, self.conf.init_size, &mut rng)?,
            DesignPlugin::Ccd => ccd_design(&self.roi)?,
            DesignPlugin::FractionalFactorial => fractional_factorial_res3(&self.roi)?,
        };
        let table = assign_metadata(table, self.conf.init_repeats, 0, self.conf.seed, 0)?;
        if table.total_repeats() > self.conf.nevals {
            return Err(SpotError::Config {
                key: "auto.loop.nevals".into(),
                msg: format!(
                    "budget {} is below the initial design cost {}",
                    self.conf.nevals,
                    table.total_repeats()
                ),
            });
        }
        remove_if_exists(&self.paths.res())?;
        remove_if_exists(&self.paths.bst())?;
        remove_if_exists(&self.paths.aroi())?;
        if self.conf.use_adaptive_roi {
            write_roi(&self.roi, &self.paths.aroi())?;
        }
        write_des(&table, &self.paths.des())?;
        Ok(table)
    }

    /// Runs the design still needs: `REPEATS` minus runs already in `results`.
    pub fn pending_runs(design: &DesignTable, results: &ResultTable) -> u64 {
        design
            .rows
            .iter()
            .map(|r| u64::from(r.repeats).saturating_sub(results.count(r.config) as u64))
            .sum()
    }

    /// Run every design row up to its `REPEATS`, append the results and,
    /// if anything ran, the incumbent to the best file. Returns the number
    /// of runs.
    pub fn run_task(&self) -> Result<usize> {
        let design = self.design()?;
        let results = self.results()?;
        let known: HashMap<u64, &[f64]> = results
            .rows
            .iter()
            .map(|r| (r.config, r.values.as_slice()))
            .collect();
        let mut jobs: Vec<(&DesignPoint, u64)> = Vec::new();
        for row in &design.rows {
            if let Some(v) = known.get(&row.config) {
                if *v != row.values.as_slice() {
                    return Err(SpotError::invalid(format!(
                        "design row for config {} differs from its recorded values",
                        row.config
                    )));
                }
            }
            let have = results.count(row.config) as u64;
            for j in have..u64::from(row.repeats) {
                jobs.push((row, row.seed + j));
            }
        }
        if jobs.is_empty() {
            return Ok(0);
        }
        let total = results.len() as u64 + jobs.len() as u64;
        if total > self.conf.nevals {
            return Err(SpotError::Config {
                key: "auto.loop.nevals".into(),
                msg: format!("design needs {} runs, only {} remain", jobs.len(), self.conf.nevals - results.len() as u64),
            });
        }

        let runner = self.runner()?;
        let names = self.roi.names();
        let run = |&(row, seed): &(&DesignPoint, u64)| runner.run(&names, &row.values, &self.apd, seed);
        let outputs: Vec<Result<f64>> = if self.conf.parallel > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.conf.parallel)
                .build()
                .map_err(|e| SpotError::invalid(format!("cannot start worker threads: {e}")))?;
            pool.install(|| jobs.par_iter().map(run).collect())
        } else {
            jobs.iter().map(run).collect()
        };

        // Keep the successful prefix so the result file stays in run order.
        let mut records = Vec::with_capacity(jobs.len());
        let mut failure = None;
        for (&(row, seed), out) in jobs.iter().zip(outputs) {
            match out {
                Ok(y) if y.is_finite() => records.push(ResultRecord {
                    y,
                    values: row.values.clone(),
                    seed,
                    config: row.config,
                    step: row.step,
                }),
                Ok(y) => {
                    failure = Some(SpotError::Run { config: row.config, msg: format!("non-finite result {y}") });
                    break;
                }
                Err(e) => {
                    failure = Some(SpotError::Run { config: row.config, msg: e.to_string() });
                    break;
                }
            }
        }
        let ran = records.len();
        if ran > 0 {
            let step = records.iter().map(|r| r.step).max().unwrap_or(0);
            append_res(&records, &names, &self.paths.res())?;
            let state = self.state()?;
            let best = state.best().expect("results were just written");
            append_bst(&best.to_best(step), &names, &self.paths.bst())?;
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(ran),
        }
    }

    /// One sequential step: fit the surrogate, propose new configurations
    /// and write a design that re-evaluates the incumbent and runs every
    /// newcomer as often. Rows that do not fit the remaining budget are
    /// dropped, newest candidate first, the incumbent last.
    pub fn seq_task(&self) -> Result<DesignTable> {
        let results = self.results()?;
        if results.is_empty() {
            return Err(SpotError::invalid("the sequential step needs results; run the initial design first"));
        }
        let state = TuningState::from_results(&results, self.conf.merge, self.conf.init_repeats, self.actual_roi()?)?;
        let best = state.best().expect("results are not empty").clone();
        let step = state.step + 1;
        let k = self.conf.init_repeats + step;

        let (candidates, new_roi) = self.propose(&state, &results, step)?;

        let mut rows = vec![DesignPoint {
            values: best.values.clone(),
            config: best.config,
            repeats: k,
            step,
            seed: self.conf.seed,
        }];
        let mut next = results.max_config();
        for values in candidates {
            next += 1;
            rows.push(DesignPoint { values, config: next, repeats: k, step, seed: self.conf.seed });
        }
        let remaining = self.conf.nevals.saturating_sub(results.len() as u64);
        let best_cost = u64::from(k).saturating_sub(best.count);
        let cost = |n_rows: usize| best_cost + (n_rows as u64 - 1) * u64::from(k);
        while rows.len() > 1 && cost(rows.len()) > remaining {
            rows.pop();
        }
        if cost(rows.len()) > remaining {
            rows.clear();
        }
        let table = DesignTable { roi: self.roi.clone(), rows };
        write_des(&table, &self.paths.des())?;
        if let Some(aroi) = new_roi {
            write_roi(&aroi, &self.paths.aroi())?;
        }
        Ok(table)
    }

    fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.conf.forest_trees,
            mtry: self.conf.forest_mtry,
            min_node: self.conf.min_node,
            max_depth: self.conf.max_depth,
            bootstrap: true,
        }
    }

    fn samples(&self, d: usize) -> usize {
        self.conf.candidates.unwrap_or(200 * self.roi.dim()).max(d)
    }

    /// New configurations for `step`, and the new actual ROI in adaptive mode.
    fn propose(
        &self,
        state: &TuningState,
        results: &ResultTable,
        step: u32,
    ) -> Result<(Vec<Vec<f64>>, Option<RegionOfInterest>)> {
        let exclude = state.points();
        if self.conf.model == ModelPlugin::LinearPaths && self.conf.use_adaptive_roi {
            let out = self.adaptive(state, results, step, &exclude)?;
            return Ok((out.candidates, Some(out.roi)));
        }
        match self.fit_and_propose(results, step, &exclude) {
            Ok(c) => Ok((c, None)),
            Err(e) => {
                log::warn!("step {step}: {e}; falling back to a Latin hypercube batch");
                let mut rng = step_stream(self.conf.seed, step, purpose::FALLBACK);
                let seen: HashSet<Vec<u64>> = exclude.iter().map(|p| point_key(p)).collect();
                let pts = lhs_points(&self.roi, self.conf.new_size, &mut rng)?
                    .into_iter()
                    .filter(|p| !seen.contains(&point_key(p)))
                    .collect();
                Ok((pts, None))
            }
        }
    }

    fn fit_and_propose(&self, results: &ResultTable, step: u32, exclude: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let c = &self.conf;
        let d = c.new_size;
        let l = self.samples(d);
        let roi = &self.roi;
        let mut fit_rng = step_stream(c.seed, step, purpose::MODEL_FIT);
        let mut rng = step_stream(c.seed, step, purpose::CANDIDATES);
        let merged = || merge_dataset(results, c.merge);
        match c.model {
            ModelPlugin::Linear => {
                let m = fit_linear(&merged()?, roi)?;
                propose_candidates(&m, roi, l, d, exclude, &mut rng)
            }
            ModelPlugin::LinearPaths => {
                let m = fit_linear(&merged()?, roi)?;
                let path = if c.use_canonical_path {
                    canonical_path(&m.quadratic, c.path_points, c.path_step)
                } else {
                    steepest_descent_path(&m.quadratic, c.path_points, c.path_step)
                };
                let mut seen: HashSet<Vec<u64>> = exclude.iter().map(|p| point_key(p)).collect();
                let pts: Vec<Vec<f64>> = match path {
                    Ok(p) => p.into_iter().map(|p| p.original).filter(|p| seen.insert(point_key(p))).collect(),
                    Err(e) => {
                        log::info!("step {step}: {e}; sampling the model instead");
                        Vec::new()
                    }
                };
                if pts.is_empty() {
                    propose_candidates(&m, roi, l, d, exclude, &mut rng)
                } else {
                    Ok(pts)
                }
            }
            ModelPlugin::Tree => {
                let m = fit_tree(&raw_dataset(results)?, c.min_node, c.max_depth)?;
                propose_candidates(&m, roi, l, d, exclude, &mut rng)
            }
            ModelPlugin::Forest => {
                let m = fit_forest(&raw_dataset(results)?, &self.forest_params(), &mut fit_rng)?;
                propose_candidates(&m, roi, l, d, exclude, &mut rng)
            }
            ModelPlugin::Gp => {
                let m = fit_gp(&merged()?, c.gp_nugget, roi)?;
                propose_candidates(&m, roi, l, d, exclude, &mut rng)
            }
            ModelPlugin::ForestGp => {
                let f = fit_forest(&raw_dataset(results)?, &self.forest_params(), &mut fit_rng)?;
                let g = fit_gp(&merged()?, c.gp_nugget, roi)?;
                let models: [&dyn Surrogate; 2] = [&f, &g];
                combine_proposals(&models, roi, l, d, exclude, &mut rng)
            }
        }
    }

    fn adaptive(
        &self,
        state: &TuningState,
        results: &ResultTable,
        step: u32,
        exclude: &[Vec<f64>],
    ) -> Result<AdaptiveOutcome> {
        let c = &self.conf;
        let aroi = &state.roi;
        let phase = AdaptivePhase::for_step(step);
        let linear = if phase == AdaptivePhase::Orientation {
            let merged = merge_dataset(results, c.merge)?;
            let inside: Vec<usize> = (0..merged.len()).filter(|&i| aroi.contains(&merged.x[i])).collect();
            // Fit locally when the actual ROI holds enough points.
            let data = if inside.len() >= self.roi.dim() + 2 {
                Dataset::new(
                    inside.iter().map(|&i| merged.x[i].clone()).collect(),
                    inside.iter().map(|&i| merged.y[i]).collect(),
                )?
            } else {
                merged
            };
            match fit_linear(&data, aroi) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("step {step}: {e}");
                    None
                }
            }
        } else {
            None
        };
        let tree = fit_tree(&raw_dataset(results)?, c.min_node, c.max_depth).ok();
        let best = match c.adaptive_best_from {
            BestFrom::AllEvaluated => state.best(),
            BestFrom::PathOnly => state
                .population
                .iter()
                .filter(|r| r.step == state.step)
                .reduce(|a, b| if b.utility < a.utility { b } else { a })
                .or_else(|| state.best()),
        }
        .expect("results are not empty");
        let settings = AdaptiveSettings {
            path_points: c.path_points,
            path_step: c.path_step,
            canonical: c.use_canonical_path,
            samples: self.samples(c.new_size),
            new_size: c.new_size,
            restart_size: c.restart_size.unwrap_or(c.init_size),
            seed: c.seed,
        };
        adaptive_roi_step(
            step,
            &self.roi,
            aroi,
            linear.as_ref(),
            tree.as_ref().map(|t| t as &dyn Surrogate),
            &best.values,
            &settings,
            exclude,
        )
    }

    /// Initial design, then alternating sequential steps and runs until the
    /// budget is spent or a step has nothing left to run.
    pub fn auto_task(&self) -> Result<TuningState> {
        self.init_task()?;
        self.run_task()?;
        loop {
            let results = self.results()?;
            if results.len() as u64 >= self.conf.nevals {
                break;
            }
            let design = self.seq_task()?;
            if Project::pending_runs(&design, &results) == 0 {
                break;
            }
            self.run_task()?;
        }
        self.state()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AlgorithmPlugin;
    use crate::fileio::read_bst;
    use crate::param::parse_roi;

    fn project(dir: &Path, nevals: u64) -> Project {
        let conf = SpotConfig {
            nevals,
            init_size: 5,
            init_repeats: 2,
            algorithm: AlgorithmPlugin::Branin,
            forest_trees: 50,
            ..SpotConfig::default()
        };
        let roi = parse_roi("X1 -5 10 FLOAT\nX2 0 15 FLOAT").unwrap();
        Project::new(conf, ProjectPaths::new(dir, "t"), roi, Apd::default()).unwrap()
    }

    #[test]
    fn task_names() {
        assert_eq!("SEQ".parse::<TaskKind>().unwrap(), TaskKind::Seq);
        assert_eq!("Auto".parse::<TaskKind>().unwrap(), TaskKind::Auto);
        assert_eq!(TaskKind::default(), TaskKind::Auto);
        assert!("bogus".parse::<TaskKind>().is_err());
    }

    #[test]
    fn init_then_run() {
        let dir = tempfile::tempdir().unwrap();
        let p = project(dir.path(), 40);
        let des = p.init_task().unwrap();
        assert_eq!((des.len(), des.rows[0].repeats, des.rows[0].step), (5, 2, 0));
        assert_eq!(p.run_task().unwrap(), 10);
        assert_eq!(p.run_task().unwrap(), 0);
        let res = p.results().unwrap();
        assert_eq!(res.len(), 10);
        let seeds: Vec<u64> = res.rows.iter().filter(|r| r.config == 1).map(|r| r.seed).collect();
        assert_eq!(seeds, vec![1235, 1236]);
        assert_eq!(read_bst(&p.paths.bst()).unwrap().1.len(), 1);
        // Re-initializing resets the project.
        p.init_task().unwrap();
        assert!(p.results().unwrap().is_empty());
        assert!(!p.paths.bst().exists());
    }

    #[test]
    fn sequential_step_is_fair() {
        let dir = tempfile::tempdir().unwrap();
        let p = project(dir.path(), 40);
        p.init_task().unwrap();
        p.run_task().unwrap();
        let best = p.state().unwrap().best().unwrap().config;
        let des = p.seq_task().unwrap();
        assert_eq!(des.rows[0].config, best);
        assert!(des.rows.iter().all(|r| r.repeats == 3 && r.step == 1));
        assert_eq!(des.rows[1].config, 6);
        p.run_task().unwrap();
        let s = p.state().unwrap();
        for r in &des.rows {
            assert_eq!(s.get(r.config).unwrap().count, 3);
        }
        assert_eq!((s.k, s.step), (3, 1));
    }

    #[test]
    fn truncation_keeps_the_incumbent() {
        let dir = tempfile::tempdir().unwrap();
        let p = project(dir.path(), 11);
        p.init_task().unwrap();
        p.run_task().unwrap();
        let des = p.seq_task().unwrap();
        // One run left: only the incumbent's third run fits.
        assert_eq!(des.len(), 1);
        p.run_task().unwrap();
        assert_eq!(p.results().unwrap().len(), 11);
    }

    #[test]
    fn auto_respects_budget() {
        let dir = tempfile::tempdir().unwrap();
        let p = project(dir.path(), 10);
        let s = p.auto_task().unwrap();
        assert_eq!((s.evals_used, s.step), (10, 0));
        let p = project(dir.path(), 60);
        let s = p.auto_task().unwrap();
        assert!(s.evals_used <= 60);
        let (_, bst) = read_bst(&p.paths.bst()).unwrap();
        assert_eq!(bst.len() as u32, s.step + 1);
    }

    #[test]
    fn failing_runs_name_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = project(dir.path(), 40);
        p.conf.algorithm = AlgorithmPlugin::External;
        p.conf.command = Some("exit 1".into());
        p.init_task().unwrap();
        let err = p.run_task().unwrap_err();
        assert!(matches!(err, SpotError::Run { config: 1, .. }), "{err}");
    }
}
