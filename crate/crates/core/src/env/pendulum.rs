use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{scalar_action, Action, Dynamics};
use crate::rng::Rng;

const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;
const DT: f64 = 0.05;
const G: f64 = 10.0;
const M: f64 = 1.0;
const L: f64 = 1.0;

/// Pendulum-v0. State `[theta, theta_dot]`, observation `(cos, sin, theta_dot)`.
#[derive(Debug, Clone, Default)]
pub struct Pendulum {
    pub state: [f64; 2],
}

/// Maps an angle into [-pi, pi) with a non-negative modulus, like numpy's `%`.
pub(crate) fn angle_normalize(x: f64) -> f64 {
    let r = libm::fmod(x + PI, 2.0 * PI);
    let r = if r < 0.0 { r + 2.0 * PI } else { r };
    r - PI
}

impl Dynamics for Pendulum {
    fn reset(&mut self, rng: &mut Rng) {
        self.state = [rng.uniform_range(-PI, PI), rng.uniform_range(-1.0, 1.0)];
    }

    fn advance(&mut self, action: &Action) -> (f64, bool) {
        let [th, thdot] = self.state;
        let u = scalar_action(action).clamp(-MAX_TORQUE, MAX_TORQUE);
        let th_n = angle_normalize(th);
        let cost = th_n * th_n + 0.1 * thdot * thdot + 0.001 * u * u;

        let new_thdot =
            thdot + (-3.0 * G / (2.0 * L) * libm::sin(th + PI) + 3.0 / (M * L * L) * u) * DT;
        let new_th = th + new_thdot * DT;
        let new_thdot = new_thdot.clamp(-MAX_SPEED, MAX_SPEED);
        self.state = [new_th, new_thdot];
        (-cost, false)
    }

    fn observe(&self) -> Vec<f64> {
        let [th, thdot] = self.state;
        vec![libm::cos(th), libm::sin(th), thdot]
    }
}
