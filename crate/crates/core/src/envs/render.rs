use super::EnvId;

/// Display length of the pole.
pub const POLE_DISPLAY_LENGTH: f64 = 1.0;

/// Geometry needed to draw one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Scene {
    /// Cart centred at `(cart_x, 0)`, pole from the cart to `pole_tip`.
    CartPole { cart_x: f64, pole_tip: (f64, f64) },
    /// Car on the curve `y = sin(3x)`.
    MountainCar { car: (f64, f64) },
}

pub fn render_state(env: EnvId, observation: &[f64]) -> Scene {
    match env {
        EnvId::CartPole => {
            let (x, theta) = (observation[0], observation[2]);
            Scene::CartPole {
                cart_x: x,
                pole_tip: (x + POLE_DISPLAY_LENGTH * libm::sin(theta), POLE_DISPLAY_LENGTH * libm::cos(theta)),
            }
        }
        EnvId::MountainCar => {
            let position = observation[0];
            Scene::MountainCar { car: (position, libm::sin(3.0 * position)) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn upright_pole() {
        assert_eq!(render_state(EnvId::CartPole, &[0.0; 4]), Scene::CartPole { cart_x: 0.0, pole_tip: (0.0, 1.0) });
    }

    #[test]
    fn horizontal_pole() {
        let Scene::CartPole { pole_tip, .. } = render_state(EnvId::CartPole, &[0.0, 0.0, FRAC_PI_2, 0.0]) else {
            panic!("wrong scene kind");
        };
        assert!((pole_tip.0 - 1.0).abs() < 1e-15);
        assert!(pole_tip.1.abs() < 1e-15);
    }

    #[test]
    fn car_height() {
        assert_eq!(
            render_state(EnvId::MountainCar, &[-0.5, 0.0]),
            Scene::MountainCar { car: (-0.5, libm::sin(-1.5)) }
        );
    }
}
