use alloc::string::String;
use core::fmt::Write;

use super::EnvId;

/// The environment description handed to the language models.
///
/// Built only from the observation spec and the action/termination rules;
/// it never contains simulator code. Byte-stable across runs.
pub fn describe(env: EnvId) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Environment: {}", env.title());
    out.push_str(match env {
        EnvId::CartPole => {
            "A pole is attached by an unactuated joint to a cart that moves along a frictionless track. \
             The pole starts upright and the agent balances it by pushing the cart left or right.\n"
        }
        EnvId::MountainCar => {
            "A car is placed at the bottom of a sinusoidal valley. Its engine is too weak to climb the right \
             hill directly, so it must build momentum by driving back and forth to reach the flag on the right hilltop.\n"
        }
    });
    out.push_str("Observation variables:\n");
    for var in env.observation_spec().variables() {
        let _ = writeln!(
            out,
            "{} ({}): {}, range [{:?}, {:?}]",
            var.name, var.unit, var.description, var.low, var.high
        );
    }
    out.push_str("Actions: ");
    for (i, meaning) in env.action_meanings().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{i} = {meaning}");
    }
    out.push('\n');
    out.push_str(match env {
        EnvId::CartPole => {
            "Termination: the episode ends when |cart_position| > 2.4 or |pole_angle| > 0.2095.\n"
        }
        EnvId::MountainCar => "Termination: the episode ends when position >= 0.5 (goal reached).\n",
    });
    let _ = writeln!(out, "Maximum episode length: {} steps", env.max_steps());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartpole_lines() {
        let text = describe(EnvId::CartPole);
        assert!(text.contains("\npole_angle (rad): angle of the pole from vertical, range [-0.418, 0.418]\n"));
        assert!(text.contains("Actions: 0 = push left, 1 = push right\n"));
        assert!(text.contains("Maximum episode length: 500 steps"));
    }

    #[test]
    fn mountaincar_lines() {
        let text = describe(EnvId::MountainCar);
        assert!(text.contains("\nposition (m): "));
        assert!(text.contains("\nvelocity (m/step): "));
        assert!(text.contains("Actions: 0 = push left, 1 = no push, 2 = push right"));
    }

    #[test]
    fn byte_stable() {
        for env in EnvId::ALL {
            assert_eq!(describe(env), describe(env));
        }
    }
}
