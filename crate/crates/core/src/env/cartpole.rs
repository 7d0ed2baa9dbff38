use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{discrete_action, Action, Dynamics};
use crate::rng::Rng;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * PI / 360.0;
const X_THRESHOLD: f64 = 2.4;

/// CartPole-v1 with explicit Euler integration. State `[x, x_dot, theta, theta_dot]`.
#[derive(Debug, Clone, Default)]
pub struct CartPole {
    pub state: [f64; 4],
}

impl Dynamics for CartPole {
    fn reset(&mut self, rng: &mut Rng) {
        for s in &mut self.state {
            *s = rng.uniform_range(-0.05, 0.05);
        }
    }

    fn advance(&mut self, action: &Action) -> (f64, bool) {
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if discrete_action(action) == 1 { FORCE_MAG } else { -FORCE_MAG };
        let cos = libm::cos(theta);
        let sin = libm::sin(theta);
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;

        let x = x + TAU * x_dot;
        let x_dot = x_dot + TAU * x_acc;
        let theta = theta + TAU * theta_dot;
        let theta_dot = theta_dot + TAU * theta_acc;
        self.state = [x, x_dot, theta, theta_dot];

        let terminal = !(-X_THRESHOLD..=X_THRESHOLD).contains(&x)
            || !(-THETA_THRESHOLD..=THETA_THRESHOLD).contains(&theta);
        (1.0, terminal)
    }

    fn observe(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
