use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::train::Policy;
use crate::dsl::TypedProgram;
use crate::envs::{objective_metrics, EnvId, EnvModel, TrajectoryLog, TrajectoryStep};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub success_rate: f64,
    pub metrics: BTreeMap<String, f64>,
    pub logs: Vec<TrajectoryLog>,
}

/// Runs the greedy policy for `episodes` episodes seeded `seed, seed + 1, …`.
///
/// When `reward` is given, each step also records the custom reward (or
/// `None` if the program faulted there); it does not influence actions.
pub fn evaluate_policy(
    env_id: EnvId,
    policy: &Policy,
    reward: Option<&TypedProgram>,
    episodes: u32,
    seed: u64,
    r_max: f64,
) -> PolicyEvaluation {
    assert!(episodes > 0, "at least one evaluation episode");
    let mut env = EnvModel::new(env_id);
    let mut features = vec![0usize; policy.coder().n_tilings()];
    let mut logs = Vec::with_capacity(episodes as usize);

    for i in 0..episodes {
        let episode_seed = seed.wrapping_add(i as u64);
        let mut obs = env.reset(episode_seed);
        let mut steps = Vec::new();
        let cause = loop {
            policy.coder().features_into(&obs, &mut features);
            let action = policy.greedy(&features);
            let step = env.step(action).expect("greedy action on a live episode");
            let done = step.terminated || step.truncated;
            let custom_reward = reward.and_then(|program| {
                let success_now = done && env_id.is_success(step.cause, env.steps());
                let failure_now = step.terminated && step.cause.is_failure();
                program.evaluate(&step.observation, success_now, failure_now, r_max).ok().map(|e| e.reward)
            });
            steps.push(TrajectoryStep { observation: obs, action, custom_reward, legacy_reward: step.legacy_reward });
            if done {
                break step.cause;
            }
            obs = step.observation;
        };
        let episode_length = steps.len() as u32;
        logs.push(TrajectoryLog {
            seed: episode_seed,
            steps,
            cause,
            success: env_id.is_success(cause, episode_length),
            episode_length,
        });
    }

    let metrics = objective_metrics(env_id, &logs).expect("non-empty logs");
    let success_rate = metrics["success_rate"];
    PolicyEvaluation { success_rate, metrics, logs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::compile;
    use crate::envs::{success, TerminationCause};
    use crate::learner::{train, LearnerConfig, TileCoder};

    #[test]
    fn evaluation_is_deterministic_and_consistent() {
        let reward = compile("return 1.0 - abs(pole_angle);", &EnvId::CartPole.observation_spec()).unwrap();
        let config = LearnerConfig { training_episodes: 40, seed: 5, ..LearnerConfig::default() };
        let (policy, _) = train(EnvId::CartPole, &reward, &config).unwrap();
        let a = evaluate_policy(EnvId::CartPole, &policy, Some(&reward), 10, 100, 1000.0);
        let b = evaluate_policy(EnvId::CartPole, &policy, Some(&reward), 10, 100, 1000.0);
        assert_eq!(a, b);
        for (i, log) in a.logs.iter().enumerate() {
            assert_eq!(log.seed, 100 + i as u64);
            assert_eq!(log.episode_length as usize, log.steps.len());
            assert_eq!(log.success, success(EnvId::CartPole, log));
            assert!(log.steps.iter().all(|s| s.custom_reward.is_some()));
        }
        let expected = a.logs.iter().filter(|l| l.success).count() as f64 / 10.0;
        assert_eq!(a.success_rate, expected);
    }

    #[test]
    fn untrained_policy_always_pushes_left() {
        let policy = Policy::new(TileCoder::new(&EnvId::CartPole.observation_spec(), 8, 8), 2);
        let eval = evaluate_policy(EnvId::CartPole, &policy, None, 3, 0, 1000.0);
        for log in &eval.logs {
            assert!(log.steps.iter().all(|s| s.action == 0 && s.custom_reward.is_none()));
            assert_ne!(log.cause, TerminationCause::TimeLimit);
        }
        assert_eq!(eval.success_rate, 0.0);
    }
}
