//! Under-powered car in a valley.

use super::TerminationCause;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;
pub const MAX_STEPS: u32 = 200;

/// `[position, velocity]`
pub type State = [f64; 2];

pub fn step(state: &mut State, action: u32) -> Option<TerminationCause> {
    let [mut position, mut velocity] = *state;
    velocity += (action as f64 - 1.0) * FORCE + libm::cos(3.0 * position) * (-GRAVITY);
    velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
    position += velocity;
    position = position.clamp(MIN_POSITION, MAX_POSITION);
    if position == MIN_POSITION && velocity < 0.0 {
        velocity = 0.0;
    }
    *state = [position, velocity];
    (position >= GOAL_POSITION).then_some(TerminationCause::GoalReached)
}
