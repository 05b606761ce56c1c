//! Tile-coded, ε-greedy semi-gradient Q-learning.
//!
//! Each observation variable is normalised by its spec bounds and covered
//! by `n_tilings` uniformly offset grids. Q(s, a) is linear in the active
//! tiles. Training is single-threaded and deterministic given the config
//! seed; independent jobs can run in parallel.

mod config;
mod evaluate;
mod tiles;
mod train;

pub use config::{ConfigError, LearnerConfig};
pub use evaluate::{evaluate_policy, PolicyEvaluation};
pub use tiles::TileCoder;
pub use train::{train, LearnerError, Policy, TrainingFault, TrainingReport, VariableStats};
