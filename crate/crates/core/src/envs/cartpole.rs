//! Cart-pole balancing, explicit Euler integration.

use super::TerminationCause;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole length.
pub const HALF_POLE_LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_POLE_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 0.2095;
pub const INIT_BOUND: f64 = 0.05;
pub const MAX_STEPS: u32 = 500;

/// `[x, x_dot, theta, theta_dot]`
pub type State = [f64; 4];

/// Advances one timestep. Positions update with the pre-update velocities.
pub fn step(state: &mut State, action: u32) -> Option<TerminationCause> {
    let [x, x_dot, theta, theta_dot] = *state;
    let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));

    let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
    let theta_acc =
        (GRAVITY * sin - cos * temp) / (HALF_POLE_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;

    *state = [
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        theta + TAU * theta_dot,
        theta_dot + TAU * theta_acc,
    ];

    if state[0].abs() > X_THRESHOLD {
        Some(TerminationCause::CartOutOfBounds)
    } else if state[2].abs() > THETA_THRESHOLD {
        Some(TerminationCause::PoleFell)
    } else {
        None
    }
}
