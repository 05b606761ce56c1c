use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::config::{ConfigError, LearnerConfig};
use super::tiles::TileCoder;
use crate::dsl::{Diagnostic, TypedProgram};
use crate::envs::{EnvId, EnvModel, TerminationCause};
use crate::rng::SeedRng;

/// Stream selector mixed into the config seed for exploration draws, so
/// exploration and episode seeding use independent streams.
const EXPLORATION_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Linear action values over tile features.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    coder: TileCoder,
    n_actions: usize,
    /// `weights[action * n_features + feature]`
    weights: Vec<f64>,
}

impl Policy {
    pub fn new(coder: TileCoder, n_actions: u32) -> Self {
        let weights = vec![0.0; coder.n_features() * n_actions as usize];
        Self { coder, n_actions: n_actions as usize, weights }
    }

    pub fn coder(&self) -> &TileCoder {
        &self.coder
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q(&self, features: &[usize], action: usize) -> f64 {
        let base = action * self.coder.n_features();
        features.iter().map(|f| self.weights[base + f]).sum()
    }

    /// Greedy action; ties go to the lowest index.
    pub fn greedy(&self, features: &[usize]) -> u32 {
        let mut best = 0;
        let mut best_q = self.q(features, 0);
        for action in 1..self.n_actions {
            let q = self.q(features, action);
            if q > best_q {
                best = action;
                best_q = q;
            }
        }
        best as u32
    }

    pub fn max_q(&self, features: &[usize]) -> f64 {
        (0..self.n_actions).map(|a| self.q(features, a)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn update(&mut self, features: &[usize], action: usize, delta: f64) {
        let base = action * self.coder.n_features();
        for f in features {
            self.weights[base + f] += delta;
        }
    }

    fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariableStats {
    pub name: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Why training stopped early.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum TrainingFault {
    /// The reward program faulted; `step_index` counts training steps from 0.
    RewardFault { diagnostic: Diagnostic, step_index: u64, episode: u32 },
    NonfiniteWeights { episode: u32 },
}

/// Statistics of one training job. The per-episode lists cover completed
/// episodes only and always have equal length.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingReport {
    pub env: EnvId,
    pub seed: u64,
    pub custom_returns: Vec<f64>,
    pub legacy_returns: Vec<f64>,
    pub lengths: Vec<u32>,
    pub successes: Vec<bool>,
    pub causes: Vec<TerminationCause>,
    pub total_steps: u64,
    pub clamp_events: u64,
    pub fault_count: u32,
    pub fault: Option<TrainingFault>,
    pub observation_stats: Vec<VariableStats>,
    /// Filled in by callers that have a clock.
    pub wall_time_ms: Option<u64>,
}

impl TrainingReport {
    pub fn completed_episodes(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_faulted(&self) -> bool {
        self.fault.is_some()
    }

    pub fn training_success_rate(&self) -> f64 {
        if self.successes.is_empty() {
            return 0.0;
        }
        self.successes.iter().filter(|s| **s).count() as f64 / self.successes.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("reward program was checked against a different observation spec")]
    SpecMismatch,
}

struct ObsAccumulator {
    sum: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
    count: u64,
}

impl ObsAccumulator {
    fn new(dims: usize) -> Self {
        Self { sum: vec![0.0; dims], min: vec![f64::INFINITY; dims], max: vec![f64::NEG_INFINITY; dims], count: 0 }
    }

    fn push(&mut self, obs: &[f64]) {
        for (d, &x) in obs.iter().enumerate() {
            self.sum[d] += x;
            self.min[d] = self.min[d].min(x);
            self.max[d] = self.max[d].max(x);
        }
        self.count += 1;
    }

    fn finish(self, env: &EnvModel) -> Vec<VariableStats> {
        env.spec()
            .variables()
            .iter()
            .enumerate()
            .map(|(d, var)| {
                let seen = self.count > 0;
                VariableStats {
                    name: var.name.clone(),
                    mean: if seen { self.sum[d] / self.count as f64 } else { 0.0 },
                    min: if seen { self.min[d] } else { 0.0 },
                    max: if seen { self.max[d] } else { 0.0 },
                }
            })
            .collect()
    }
}

/// Trains a policy on `env` against the reward program.
///
/// The reward for a transition is evaluated on the next observation with
/// `success` true only on the step where the episode's success condition
/// becomes satisfied and `failure` true on a failure termination. The TD
/// target bootstraps from the next state unless the episode terminated
/// (time-limit truncation still bootstraps). Training stops after
/// `training_episodes` or when `total_step_budget` steps have been
/// simulated, whichever comes first; an episode cut off by the budget is not
/// counted as completed.
///
/// Reward faults and non-finite weights stop training and are returned in
/// [`TrainingReport::fault`] together with the policy learned so far.
pub fn train(env_id: EnvId, reward: &TypedProgram, config: &LearnerConfig) -> Result<(Policy, TrainingReport), LearnerError> {
    config.validate()?;
    let mut env = EnvModel::new(env_id);
    if !reward.observation_names().iter().map(String::as_str).eq(env.spec().names()) {
        return Err(LearnerError::SpecMismatch);
    }

    let coder = TileCoder::new(env.spec(), config.n_tilings, config.tiles_per_dim);
    let mut policy = Policy::new(coder, env.action_count());
    let alpha = config.step_size / config.n_tilings as f64;
    let n_tilings = config.n_tilings as usize;
    let n_actions = env.action_count() as usize;

    let mut seeds = SeedRng::new(config.seed);
    let mut explore = SeedRng::new(config.seed ^ EXPLORATION_STREAM);
    let mut stats = ObsAccumulator::new(env.spec().len());
    let mut report = TrainingReport {
        env: env_id,
        seed: config.seed,
        custom_returns: Vec::new(),
        legacy_returns: Vec::new(),
        lengths: Vec::new(),
        successes: Vec::new(),
        causes: Vec::new(),
        total_steps: 0,
        clamp_events: 0,
        fault_count: 0,
        fault: None,
        observation_stats: Vec::new(),
        wall_time_ms: None,
    };

    let mut features = vec![0usize; n_tilings];
    let mut next_features = vec![0usize; n_tilings];
    let budget = config.total_step_budget.unwrap_or(u64::MAX);

    'episodes: for episode in 0..config.training_episodes {
        if report.total_steps >= budget {
            break;
        }
        let epsilon = config.epsilon(episode);
        let mut obs = env.reset(seeds.next_u64());
        policy.coder.features_into(&obs, &mut features);
        let (mut custom_return, mut legacy_return) = (0.0, 0.0);

        loop {
            let action = if explore.next_f64() < epsilon {
                explore.below(n_actions) as u32
            } else {
                policy.greedy(&features)
            };
            stats.push(&obs);
            let step = env.step(action).expect("action in range on a live episode");
            let step_index = report.total_steps;
            report.total_steps += 1;
            let done = step.terminated || step.truncated;
            let success_now = done && env_id.is_success(step.cause, env.steps());
            let failure_now = step.terminated && step.cause.is_failure();

            let r = match reward.evaluate(&step.observation, success_now, failure_now, config.r_max) {
                Ok(eval) => {
                    report.clamp_events += u64::from(eval.clamped);
                    eval.reward
                }
                Err(diagnostic) => {
                    report.fault_count += 1;
                    report.fault = Some(TrainingFault::RewardFault { diagnostic, step_index, episode });
                    break 'episodes;
                }
            };
            custom_return += r;
            legacy_return += step.legacy_reward;

            let bootstrap = if step.terminated {
                0.0
            } else {
                policy.coder.features_into(&step.observation, &mut next_features);
                config.discount * policy.max_q(&next_features)
            };
            let delta = r + bootstrap - policy.q(&features, action as usize);
            policy.update(&features, action as usize, alpha * delta);

            if done {
                report.custom_returns.push(custom_return);
                report.legacy_returns.push(legacy_return);
                report.lengths.push(env.steps());
                report.successes.push(success_now);
                report.causes.push(step.cause);
                break;
            }
            if report.total_steps >= budget {
                break;
            }
            obs = step.observation;
            core::mem::swap(&mut features, &mut next_features);
        }

        if !policy.all_finite() {
            report.fault = Some(TrainingFault::NonfiniteWeights { episode });
            break;
        }
    }

    report.observation_stats = stats.finish(&env);
    Ok((policy, report))
}
