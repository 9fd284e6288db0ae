//! Tuner settings read from CONF files.

use std::str::FromStr;

use crate::error::{Result, SpotError};
use crate::fileio::kv::{self, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignPlugin {
    Lhs,
    Ccd,
    FractionalFactorial,
}

impl FromStr for DesignPlugin {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spotCreateDesignLhs" | "spotCreateLhs" => Ok(DesignPlugin::Lhs),
            "spotCreateDesignFrF2" | "spotCreateFrF2" => Ok(DesignPlugin::Ccd),
            "spotCreateBasicDoe3R" => Ok(DesignPlugin::FractionalFactorial),
            other => Err(format!("unknown design plugin `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPlugin {
    /// Response surface, candidates by sampling.
    Linear,
    /// Response surface, candidates along the steepest-descent or canonical path.
    LinearPaths,
    Tree,
    Forest,
    Gp,
    /// Forest and Gaussian process proposals combined.
    ForestGp,
}

impl ModelPlugin {
    pub fn uses_raw_data(self) -> bool {
        matches!(self, ModelPlugin::Tree | ModelPlugin::Forest)
    }
}

impl FromStr for ModelPlugin {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spotPredictLm" => Ok(ModelPlugin::Linear),
            "spotPredictLmOptim" => Ok(ModelPlugin::LinearPaths),
            "spotPredictTree" => Ok(ModelPlugin::Tree),
            "spotPredictRandomForest" => Ok(ModelPlugin::Forest),
            "spotPredictMlegp" | "spotPredictTgp" => Ok(ModelPlugin::Gp),
            "spotPredictRandomForestMlegp" => Ok(ModelPlugin::ForestGp),
            other => Err(format!("unknown prediction model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmPlugin {
    Sann,
    Es,
    Branin,
    External,
}

impl FromStr for AlgorithmPlugin {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spotAlgStartSann" => Ok(AlgorithmPlugin::Sann),
            "spotAlgStartES" | "spotAlgStartEs" => Ok(AlgorithmPlugin::Es),
            "spotFuncStartBranin" => Ok(AlgorithmPlugin::Branin),
            "spotAlgStartExternal" => Ok(AlgorithmPlugin::External),
            other => Err(format!("unknown algorithm plugin `{other}`")),
        }
    }
}

/// How repeated results of one configuration are aggregated into a utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeFunc {
    Mean,
    Median,
}

impl MergeFunc {
    pub fn apply(self, ys: &[f64]) -> f64 {
        match self {
            MergeFunc::Mean => ys.iter().sum::<f64>() / ys.len() as f64,
            MergeFunc::Median => {
                let mut v = ys.to_vec();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                if v.len() % 2 == 1 {
                    v[m]
                } else {
                    (v[m - 1] + v[m]) / 2.0
                }
            }
        }
    }
}

impl FromStr for MergeFunc {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(MergeFunc::Mean),
            "median" => Ok(MergeFunc::Median),
            other => Err(format!("unknown merge function `{other}`")),
        }
    }
}

/// Pool from which the recalibration phase picks its new center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestFrom {
    AllEvaluated,
    PathOnly,
}

impl FromStr for BestFrom {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(BestFrom::AllEvaluated),
            "path" => Ok(BestFrom::PathOnly),
            other => Err(format!("expected `all` or `path`, found `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotConfig {
    pub basename: Option<String>,
    pub roi_file: Option<String>,
    pub apd_file: Option<String>,

    /// Total number of algorithm runs (`auto.loop.nevals`).
    pub nevals: u64,
    pub init_size: usize,
    pub init_repeats: u32,
    pub init_design: DesignPlugin,

    pub model: ModelPlugin,
    /// New configurations per sequential step (`seq.design.new.size`).
    pub new_size: usize,
    /// Random candidates scored on the model (`seq.candidates`); `200 * n` when unset.
    pub candidates: Option<usize>,
    pub merge: MergeFunc,
    pub use_canonical_path: bool,
    pub use_adaptive_roi: bool,
    pub path_points: usize,
    pub path_step: f64,
    pub adaptive_best_from: BestFrom,
    pub restart_size: Option<usize>,

    pub forest_trees: usize,
    pub forest_mtry: Option<usize>,
    pub min_node: usize,
    pub max_depth: usize,
    pub gp_nugget: f64,

    pub algorithm: AlgorithmPlugin,
    pub seed: u64,
    pub command: Option<String>,
    pub timeout_secs: f64,
    pub parallel: usize,

    pub report_tree_depth: usize,
    pub report_sens_grid: usize,
}

impl Default for SpotConfig {
    fn default() -> Self {
        SpotConfig {
            basename: None,
            roi_file: None,
            apd_file: None,
            nevals: 100,
            init_size: 10,
            init_repeats: 2,
            init_design: DesignPlugin::Lhs,
            model: ModelPlugin::Forest,
            new_size: 1,
            candidates: None,
            merge: MergeFunc::Mean,
            use_canonical_path: false,
            use_adaptive_roi: false,
            path_points: 5,
            path_step: 0.1,
            adaptive_best_from: BestFrom::AllEvaluated,
            restart_size: None,
            forest_trees: 500,
            forest_mtry: None,
            min_node: 5,
            max_depth: 30,
            gp_nugget: 1e-8,
            algorithm: AlgorithmPlugin::Sann,
            seed: 1235,
            command: None,
            timeout_secs: 300.0,
            parallel: 1,
            report_tree_depth: 3,
            report_sens_grid: 21,
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> SpotError {
    SpotError::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn want_str(key: &str, v: &Value) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| bad(key, format!("expected a string, found {v}")))
}

fn want_parsed<T: FromStr<Err = String>>(key: &str, v: &Value) -> Result<T> {
    want_str(key, v)?.parse().map_err(|e| bad(key, e))
}

fn want_uint(key: &str, v: &Value) -> Result<u64> {
    match v.as_f64() {
        Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as u64),
        _ => Err(bad(key, format!("expected a non-negative integer, found {v}"))),
    }
}

fn want_positive(key: &str, v: &Value) -> Result<usize> {
    match want_uint(key, v)? {
        0 => Err(bad(key, "must be at least 1")),
        x => Ok(x as usize),
    }
}

fn want_real(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, format!("expected a number, found {v}")))
}

fn want_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| bad(key, format!("expected TRUE or FALSE, found {v}")))
}

impl SpotConfig {
    /// Set one key. Returns `Ok(false)` for keys this toolkit does not know.
    pub fn apply(&mut self, key: &str, v: &Value) -> Result<bool> {
        match key {
            "io.basename" => self.basename = Some(want_str(key, v)?),
            "io.roiFileName" => self.roi_file = Some(want_str(key, v)?),
            "io.apdFileName" => self.apd_file = Some(want_str(key, v)?),
            "auto.loop.nevals" => self.nevals = want_uint(key, v)?,
            "init.design.size" => self.init_size = want_positive(key, v)?,
            "init.design.repeats" => self.init_repeats = want_positive(key, v)? as u32,
            "init.design.func" => self.init_design = want_parsed(key, v)?,
            "seq.predictionModel.func" => self.model = want_parsed(key, v)?,
            "seq.design.new.size" => self.new_size = want_positive(key, v)?,
            "seq.candidates" => self.candidates = Some(want_positive(key, v)?),
            "seq.merge.func" => self.merge = want_parsed(key, v)?,
            "seq.useCanonicalPath" => self.use_canonical_path = want_bool(key, v)?,
            "seq.useAdaptiveRoi" => self.use_adaptive_roi = want_bool(key, v)?,
            "seq.path.points" => self.path_points = want_positive(key, v)?,
            "seq.path.step" => {
                let s = want_real(key, v)?;
                if s <= 0.0 {
                    return Err(bad(key, "must be positive"));
                }
                self.path_step = s;
            }
            "seq.adaptiveRoi.bestFrom" => self.adaptive_best_from = want_parsed(key, v)?,
            "seq.adaptiveRoi.restartSize" => self.restart_size = Some(want_positive(key, v)?),
            "seq.forest.ntree" => self.forest_trees = want_positive(key, v)?,
            "seq.forest.mtry" => self.forest_mtry = Some(want_positive(key, v)?),
            "seq.tree.minNode" => self.min_node = want_positive(key, v)?,
            "seq.tree.maxDepth" => self.max_depth = want_positive(key, v)?,
            "seq.gp.nugget" => {
                let g = want_real(key, v)?;
                if g < 0.0 {
                    return Err(bad(key, "must be non-negative"));
                }
                self.gp_nugget = g;
            }
            "alg.func" => self.algorithm = want_parsed(key, v)?,
            "alg.seed" => self.seed = want_uint(key, v)?,
            "alg.command" => self.command = Some(want_str(key, v)?),
            "alg.timeout" => {
                let t = want_real(key, v)?;
                if t <= 0.0 {
                    return Err(bad(key, "must be positive"));
                }
                self.timeout_secs = t;
            }
            "alg.parallel" => self.parallel = want_positive(key, v)?,
            "report.tree.maxDepth" => self.report_tree_depth = want_positive(key, v)?,
            "report.sens.grid" => self.report_sens_grid = want_positive(key, v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Apply a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = match kv::parse_assignment(assignment) {
            Ok(Some(kv)) => kv,
            Ok(None) => return Err(SpotError::invalid(format!("empty override `{assignment}`"))),
            Err(msg) => return Err(SpotError::invalid(msg)),
        };
        if !self.apply(&key, &value)? {
            return Err(bad(&key, "unknown key"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let init = self.init_size as u64 * u64::from(self.init_repeats);
        if self.nevals < init {
            return Err(bad(
                "auto.loop.nevals",
                format!("budget {} is below the initial design cost {init}", self.nevals),
            ));
        }
        if self.algorithm == AlgorithmPlugin::External && self.command.is_none() {
            return Err(bad("alg.command", "required by spotAlgStartExternal"));
        }
        Ok(())
    }
}

/// Parse CONF contents: known keys are type checked, unknown keys are logged
/// and skipped, missing keys keep their defaults.
pub fn read_conf(text: &str) -> Result<SpotConfig> {
    let mut conf = SpotConfig::default();
    for (line, key, value) in kv::parse_lines(text)? {
        let known = conf.apply(&key, &value).map_err(|e| match e {
            SpotError::Config { key, msg } => SpotError::Config {
                key,
                msg: format!("line {line}: {msg}"),
            },
            other => other,
        })?;
        if !known {
            log::warn!("line {line}: ignoring unknown configuration key `{key}`");
        }
    }
    Ok(conf)
}
