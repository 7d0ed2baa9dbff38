use alloc::vec::Vec;

use super::{discrete_action, scalar_action, Action, Dynamics};
use crate::rng::Rng;

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;

fn reset_state(rng: &mut Rng) -> [f64; 2] {
    [rng.uniform_range(-0.6, -0.4), 0.0]
}

fn integrate(state: [f64; 2], accel: f64) -> [f64; 2] {
    let [position, velocity] = state;
    let velocity = (velocity + accel).clamp(-MAX_SPEED, MAX_SPEED);
    let position = (position + velocity).clamp(MIN_POSITION, MAX_POSITION);
    let velocity = if position == MIN_POSITION && velocity < 0.0 { 0.0 } else { velocity };
    [position, velocity]
}

/// MountainCar-v0. State `[position, velocity]`.
#[derive(Debug, Clone, Default)]
pub struct MountainCar {
    pub state: [f64; 2],
}

impl Dynamics for MountainCar {
    fn reset(&mut self, rng: &mut Rng) {
        self.state = reset_state(rng);
    }

    fn advance(&mut self, action: &Action) -> (f64, bool) {
        const FORCE: f64 = 0.001;
        const GRAVITY: f64 = 0.0025;
        let a = discrete_action(action) as f64;
        let accel = (a - 1.0) * FORCE + libm::cos(3.0 * self.state[0]) * (-GRAVITY);
        self.state = integrate(self.state, accel);
        let [position, velocity] = self.state;
        (-1.0, position >= 0.5 && velocity >= 0.0)
    }

    fn observe(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}

/// MountainCarContinuous-v0. State `[position, velocity]`.
#[derive(Debug, Clone, Default)]
pub struct ContinuousMountainCar {
    pub state: [f64; 2],
}

impl Dynamics for ContinuousMountainCar {
    fn reset(&mut self, rng: &mut Rng) {
        self.state = reset_state(rng);
    }

    fn advance(&mut self, action: &Action) -> (f64, bool) {
        const POWER: f64 = 0.0015;
        let force = scalar_action(action).clamp(-1.0, 1.0);
        let accel = force * POWER - 0.0025 * libm::cos(3.0 * self.state[0]);
        self.state = integrate(self.state, accel);
        let [position, velocity] = self.state;
        let done = position >= 0.45 && velocity >= 0.0;
        let mut reward = if done { 100.0 } else { 0.0 };
        reward -= force * force * 0.1;
        (reward, done)
    }

    fn observe(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
