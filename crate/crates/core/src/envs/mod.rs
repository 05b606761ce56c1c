//! Reference classic-control environments.
//!
//! Both environments are deterministic given the reset seed and the action
//! sequence. The agent-facing contract is the observation spec: programs and
//! prompts only ever see named observation variables and [`describe`] text.

pub mod cartpole;
mod describe;
mod metrics;
pub mod mountain_car;
mod render;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use describe::describe;
pub use metrics::objective_metrics;
pub use render::{render_state, Scene};

use crate::rng::SeedRng;
use crate::{ObservationSpec, ObservationVar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EnvId {
    CartPole,
    MountainCar,
}

impl EnvId {
    pub const ALL: [EnvId; 2] = [EnvId::CartPole, EnvId::MountainCar];

    /// Identifier used on the command line and in files.
    pub fn key(self) -> &'static str {
        match self {
            EnvId::CartPole => "cartpole",
            EnvId::MountainCar => "mountaincar",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            EnvId::CartPole => "CartPole",
            EnvId::MountainCar => "MountainCar",
        }
    }

    pub fn action_count(self) -> u32 {
        match self {
            EnvId::CartPole => 2,
            EnvId::MountainCar => 3,
        }
    }

    pub fn action_meanings(self) -> &'static [&'static str] {
        match self {
            EnvId::CartPole => &["push left", "push right"],
            EnvId::MountainCar => &["push left", "no push", "push right"],
        }
    }

    pub fn max_steps(self) -> u32 {
        match self {
            EnvId::CartPole => cartpole::MAX_STEPS,
            EnvId::MountainCar => mountain_car::MAX_STEPS,
        }
    }

    pub fn observation_spec(self) -> ObservationSpec {
        let var = |name: &str, low: f64, high: f64, unit: &str, description: &str| ObservationVar {
            name: name.to_string(),
            low,
            high,
            unit: unit.to_string(),
            description: description.to_string(),
        };
        let vars = match self {
            EnvId::CartPole => vec![
                var("cart_position", -4.8, 4.8, "m", "position of the cart along the track"),
                var("cart_velocity", -3.0, 3.0, "m/s", "velocity of the cart"),
                var("pole_angle", -0.418, 0.418, "rad", "angle of the pole from vertical"),
                var("pole_angular_velocity", -3.5, 3.5, "rad/s", "angular velocity of the pole"),
            ],
            EnvId::MountainCar => vec![
                var("position", mountain_car::MIN_POSITION, mountain_car::MAX_POSITION, "m", "position of the car along the valley floor"),
                var("velocity", -mountain_car::MAX_SPEED, mountain_car::MAX_SPEED, "m/step", "velocity of the car"),
            ],
        };
        ObservationSpec::new(vars).expect("built-in specs are valid")
    }

    /// The environment's built-in reward, written as a reward program.
    pub fn legacy_reward_source(self) -> &'static str {
        match self {
            EnvId::CartPole => "return 1.0;",
            EnvId::MountainCar => "return -1.0;",
        }
    }

    /// Plain-text statement of the success function.
    pub fn success_description(self) -> &'static str {
        match self {
            EnvId::CartPole => {
                "An episode is a success if it reaches 500 steps without the pole falling past 0.2095 rad or the cart leaving [-2.4, 2.4]."
            }
            EnvId::MountainCar => "An episode is a success if the car reaches position >= 0.5 within 200 steps.",
        }
    }

    /// The success function: a pure predicate on how and when an episode ended.
    pub fn is_success(self, cause: TerminationCause, episode_length: u32) -> bool {
        match self {
            EnvId::CartPole => cause == TerminationCause::TimeLimit && episode_length == self.max_steps(),
            EnvId::MountainCar => cause == TerminationCause::GoalReached && episode_length <= self.max_steps(),
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown environment `{0}` (expected cartpole or mountaincar)")]
pub struct UnknownEnv(pub String);

impl FromStr for EnvId {
    type Err = UnknownEnv;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvId::ALL
            .into_iter()
            .find(|id| id.key().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownEnv(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TerminationCause {
    #[default]
    None,
    PoleFell,
    CartOutOfBounds,
    GoalReached,
    TimeLimit,
}

impl TerminationCause {
    pub const ALL: [TerminationCause; 5] = [
        TerminationCause::None,
        TerminationCause::PoleFell,
        TerminationCause::CartOutOfBounds,
        TerminationCause::GoalReached,
        TerminationCause::TimeLimit,
    ];

    pub fn key(self) -> &'static str {
        match self {
            TerminationCause::None => "none",
            TerminationCause::PoleFell => "pole_fell",
            TerminationCause::CartOutOfBounds => "cart_out_of_bounds",
            TerminationCause::GoalReached => "goal_reached",
            TerminationCause::TimeLimit => "time_limit",
        }
    }

    /// Terminal states the agent should avoid.
    pub fn is_failure(self) -> bool {
        matches!(self, TerminationCause::PoleFell | TerminationCause::CartOutOfBounds)
    }
}

impl fmt::Display for TerminationCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("action {action} out of range for {count} actions")]
    InvalidAction { action: u32, count: u32 },
    #[error("step called on a finished episode")]
    StepAfterDone,
    #[error("no trajectory logs given")]
    EmptyLogs,
    #[error("state has {found} components, expected {expected}")]
    StateArity { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub legacy_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub cause: TerminationCause,
}

#[derive(Debug, Clone, PartialEq)]
enum State {
    CartPole(cartpole::State),
    MountainCar(mountain_car::State),
}

/// One environment instance. Single-threaded; create one per training job.
#[derive(Debug, Clone)]
pub struct EnvModel {
    id: EnvId,
    spec: ObservationSpec,
    state: State,
    steps: u32,
    done: bool,
}

impl EnvModel {
    pub fn new(id: EnvId) -> Self {
        let state = match id {
            EnvId::CartPole => State::CartPole([0.0; 4]),
            EnvId::MountainCar => State::MountainCar([-0.5, 0.0]),
        };
        Self { id, spec: id.observation_spec(), state, steps: 0, done: false }
    }

    pub fn id(&self) -> EnvId {
        self.id
    }

    pub fn spec(&self) -> &ObservationSpec {
        &self.spec
    }

    pub fn action_count(&self) -> u32 {
        self.id.action_count()
    }

    pub fn max_steps(&self) -> u32 {
        self.id.max_steps()
    }

    /// Steps taken in the current episode.
    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts a new episode. CartPole draws every component uniformly from
    /// `[-0.05, 0.05]`; MountainCar draws position from `[-0.6, -0.4]` with
    /// zero velocity. Draws use [`SeedRng`] seeded with `seed`.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = SeedRng::new(seed);
        self.state = match self.id {
            EnvId::CartPole => {
                let b = cartpole::INIT_BOUND;
                State::CartPole([
                    rng.uniform(-b, b),
                    rng.uniform(-b, b),
                    rng.uniform(-b, b),
                    rng.uniform(-b, b),
                ])
            }
            EnvId::MountainCar => State::MountainCar([rng.uniform(-0.6, -0.4), 0.0]),
        };
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    /// Forces the state and starts a fresh episode from it.
    pub fn set_state(&mut self, state: &[f64]) -> Result<(), EnvError> {
        let expected = self.spec.len();
        if state.len() != expected {
            return Err(EnvError::StateArity { expected, found: state.len() });
        }
        self.state = match self.id {
            EnvId::CartPole => State::CartPole([state[0], state[1], state[2], state[3]]),
            EnvId::MountainCar => State::MountainCar([state[0], state[1]]),
        };
        self.steps = 0;
        self.done = false;
        Ok(())
    }

    pub fn observation(&self) -> Vec<f64> {
        match &self.state {
            State::CartPole(s) => s.to_vec(),
            State::MountainCar(s) => s.to_vec(),
        }
    }

    pub fn step(&mut self, action: u32) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        let count = self.action_count();
        if action >= count {
            return Err(EnvError::InvalidAction { action, count });
        }
        let (terminal, legacy_reward) = match &mut self.state {
            State::CartPole(s) => (cartpole::step(s, action), 1.0),
            State::MountainCar(s) => (mountain_car::step(s, action), -1.0),
        };
        self.steps += 1;

        let (terminated, truncated, cause) = match terminal {
            Some(cause) => (true, false, cause),
            None if self.steps >= self.max_steps() => (false, true, TerminationCause::TimeLimit),
            None => (false, false, TerminationCause::None),
        };
        self.done = terminated || truncated;
        Ok(StepResult { observation: self.observation(), legacy_reward, terminated, truncated, cause })
    }
}

/// One recorded transition: the observation the action was taken in, the
/// action, and the rewards received for it. `custom_reward` is `None` when
/// the reward program faulted on that step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryStep {
    pub observation: Vec<f64>,
    pub action: u32,
    pub custom_reward: Option<f64>,
    pub legacy_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryLog {
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
    pub cause: TerminationCause,
    pub success: bool,
    pub episode_length: u32,
}

/// The success function applied to a complete episode log.
pub fn success(env: EnvId, log: &TrajectoryLog) -> bool {
    env.is_success(log.cause, log.episode_length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_env_ids() {
        assert_eq!("cartpole".parse(), Ok(EnvId::CartPole));
        assert_eq!("MountainCar".parse(), Ok(EnvId::MountainCar));
        assert!("lunarlander".parse::<EnvId>().is_err());
    }

    #[test]
    fn reset_is_deterministic() {
        let mut env = EnvModel::new(EnvId::CartPole);
        let a = env.reset(42);
        let b = env.reset(42);
        assert_eq!(a, b);
        assert_ne!(a, env.reset(43));
    }

    #[test]
    fn cartpole_initial_range() {
        let mut env = EnvModel::new(EnvId::CartPole);
        for seed in 0..10_000 {
            assert!(env.reset(seed).iter().all(|v| (-0.05..=0.05).contains(v)));
        }
    }

    #[test]
    fn mountaincar_initial_state() {
        let mut env = EnvModel::new(EnvId::MountainCar);
        for seed in 0..1000 {
            let obs = env.reset(seed);
            assert_eq!(obs[1], 0.0);
            assert!((-0.6..=-0.4).contains(&obs[0]));
        }
    }

    #[test]
    fn invalid_action_and_step_after_done() {
        let mut env = EnvModel::new(EnvId::CartPole);
        env.reset(0);
        assert_eq!(env.step(2), Err(EnvError::InvalidAction { action: 2, count: 2 }));
        while !env.step(1).unwrap().terminated {}
        assert_eq!(env.step(0), Err(EnvError::StepAfterDone));
    }

    #[test]
    fn cartpole_pushing_right_topples_the_pole() {
        let mut env = EnvModel::new(EnvId::CartPole);
        env.set_state(&[0.0; 4]).unwrap();
        let mut legacy = 0.0;
        let last = loop {
            let r = env.step(1).unwrap();
            assert_eq!(r.legacy_reward, 1.0);
            legacy += r.legacy_reward;
            if r.terminated || r.truncated {
                break r;
            }
        };
        assert_eq!(last.cause, TerminationCause::PoleFell);
        assert!(env.steps() < 500);
        assert_eq!(legacy, env.steps() as f64);
    }

    #[test]
    fn mountaincar_truncates_at_time_limit() {
        let mut env = EnvModel::new(EnvId::MountainCar);
        env.reset(3);
        for _ in 0..199 {
            let r = env.step(1).unwrap();
            assert!(!r.truncated && !r.terminated);
            assert_eq!(r.cause, TerminationCause::None);
        }
        let r = env.step(1).unwrap();
        assert!(r.truncated && !r.terminated);
        assert_eq!(r.cause, TerminationCause::TimeLimit);
        assert_eq!(r.legacy_reward, -1.0);
    }

    #[test]
    fn mountaincar_left_wall_zeroes_velocity() {
        let mut env = EnvModel::new(EnvId::MountainCar);
        env.set_state(&[-1.19, -0.07]).unwrap();
        let r = env.step(0).unwrap();
        assert_eq!(r.observation, vec![-1.2, 0.0]);
    }

    #[test]
    fn success_definitions() {
        let log = |cause, len| TrajectoryLog { seed: 0, steps: Vec::new(), cause, success: false, episode_length: len };
        assert!(success(EnvId::CartPole, &log(TerminationCause::TimeLimit, 500)));
        assert!(!success(EnvId::CartPole, &log(TerminationCause::PoleFell, 63)));
        assert!(success(EnvId::MountainCar, &log(TerminationCause::GoalReached, 180)));
        assert!(!success(EnvId::MountainCar, &log(TerminationCause::TimeLimit, 200)));
    }
}
