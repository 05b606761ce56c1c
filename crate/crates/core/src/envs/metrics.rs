use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use super::{EnvError, EnvId, TrajectoryLog};

/// Objective metrics over a batch of episodes.
///
/// CartPole: `cart_position_mean_abs`, `pole_angle_mean_abs` (means over all
/// steps), `mean_episode_length`, `success_rate`. MountainCar:
/// `max_position_mean` (mean of per-episode maxima), `mean_episode_length`,
/// `success_rate`.
pub fn objective_metrics(env: EnvId, logs: &[TrajectoryLog]) -> Result<BTreeMap<String, f64>, EnvError> {
    if logs.is_empty() {
        return Err(EnvError::EmptyLogs);
    }
    let n = logs.len() as f64;
    let mut metrics = BTreeMap::new();
    let mean_len = logs.iter().map(|l| l.episode_length as f64).sum::<f64>() / n;
    let success_rate = logs.iter().filter(|l| l.success).count() as f64 / n;
    metrics.insert("mean_episode_length".to_string(), mean_len);
    metrics.insert("success_rate".to_string(), success_rate);

    match env {
        EnvId::CartPole => {
            let (mut sum_x, mut sum_theta, mut count) = (0.0, 0.0, 0usize);
            for step in logs.iter().flat_map(|l| &l.steps) {
                sum_x += step.observation[0].abs();
                sum_theta += step.observation[2].abs();
                count += 1;
            }
            let denom = count.max(1) as f64;
            metrics.insert("cart_position_mean_abs".to_string(), sum_x / denom);
            metrics.insert("pole_angle_mean_abs".to_string(), sum_theta / denom);
        }
        EnvId::MountainCar => {
            let max_mean = logs
                .iter()
                .map(|l| l.steps.iter().map(|s| s.observation[0]).fold(f64::NEG_INFINITY, f64::max))
                .map(|m| if m.is_finite() { m } else { 0.0 })
                .sum::<f64>()
                / n;
            metrics.insert("max_position_mean".to_string(), max_mean);
        }
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{TerminationCause, TrajectoryStep};
    use alloc::vec;
    use alloc::vec::Vec;

    fn log(thetas: &[f64], success: bool) -> TrajectoryLog {
        TrajectoryLog {
            seed: 0,
            steps: thetas
                .iter()
                .map(|t| TrajectoryStep { observation: vec![0.0, 0.0, *t, 0.0], action: 0, custom_reward: Some(0.0), legacy_reward: 1.0 })
                .collect(),
            cause: if success { TerminationCause::TimeLimit } else { TerminationCause::PoleFell },
            success,
            episode_length: thetas.len() as u32,
        }
    }

    #[test]
    fn constant_angle() {
        let m = objective_metrics(EnvId::CartPole, &[log(&[0.05; 7], false)]).unwrap();
        assert!((m["pole_angle_mean_abs"] - 0.05).abs() < 1e-15);
        assert_eq!(m["cart_position_mean_abs"], 0.0);
        assert_eq!(m["mean_episode_length"], 7.0);
    }

    #[test]
    fn success_rate_is_mean_of_flags() {
        let m = objective_metrics(EnvId::CartPole, &[log(&[0.1], true), log(&[0.1, -0.2], false)]).unwrap();
        assert_eq!(m["success_rate"], 0.5);
        assert_eq!(m["mean_episode_length"], 1.5);
    }

    #[test]
    fn empty_batch() {
        assert_eq!(objective_metrics(EnvId::CartPole, &[]), Err(EnvError::EmptyLogs));
    }

    #[test]
    fn mountaincar_max_position() {
        let mk = |positions: &[f64]| TrajectoryLog {
            seed: 0,
            steps: positions
                .iter()
                .map(|p| TrajectoryStep { observation: vec![*p, 0.0], action: 1, custom_reward: None, legacy_reward: -1.0 })
                .collect(),
            cause: TerminationCause::TimeLimit,
            success: false,
            episode_length: positions.len() as u32,
        };
        let logs: Vec<_> = vec![mk(&[-0.5, -0.3, -0.4]), mk(&[-0.6, -0.7])];
        let m = objective_metrics(EnvId::MountainCar, &logs).unwrap();
        assert!((m["max_position_mean"] - (-0.45)).abs() < 1e-15);
        assert!(!m.contains_key("pole_angle_mean_abs"));
    }
}
