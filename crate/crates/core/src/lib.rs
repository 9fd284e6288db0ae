//! Sequential parameter optimization for stochastic algorithms.
//!
//! The crate is organized around the tuning loop: an initial design is
//! generated ([`design`]), the tuned algorithm is run on it ([`targets`]),
//! a surrogate is fitted to the results ([`model`], [`rsm`]) and sampled for
//! promising configurations, and the loop repeats under a fixed budget
//! ([`engine`]). All state lives in plain text project files ([`fileio`]).

pub mod config;
pub mod design;
pub mod engine;
pub mod error;
pub mod fileio;
pub mod model;
pub mod param;
pub mod report;
pub mod rng;
pub mod rsm;
pub mod targets;

pub use config::{ModelPlugin, SpotConfig};
pub use design::{DesignPoint, DesignTable};
pub use engine::{Project, TaskKind, TuningState};
pub use error::{Result, SpotError};
pub use fileio::{BestRecord, ProjectPaths, ResultRecord, ResultTable};
pub use model::{Dataset, FittedModel, Surrogate};
pub use param::{ParamDef, ParamType, RegionOfInterest};
pub use rsm::{QuadraticModel, StationaryAnalysis};
