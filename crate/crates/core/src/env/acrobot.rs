use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{discrete_action, Action, Dynamics};
use crate::rng::Rng;

const DT: f64 = 0.2;
const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_POS_1: f64 = 0.5;
const LINK_COM_POS_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;
const GRAVITY: f64 = 9.8;

/// Acrobot-v1 ("book" dynamics, one RK4 step of length 0.2 per action, no
/// torque noise). State `[theta1, theta2, dtheta1, dtheta2]`.
#[derive(Debug, Clone, Default)]
pub struct Acrobot {
    pub state: [f64; 4],
}

/// Time derivative of `[theta1, theta2, dtheta1, dtheta2]` under torque `a`.
fn derivs(s: [f64; 4], a: f64) -> [f64; 4] {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let l1 = LINK_LENGTH_1;
    let (lc1, lc2) = (LINK_COM_POS_1, LINK_COM_POS_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2] = s;

    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * libm::cos(theta2)) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * libm::cos(theta2)) + i2;
    let phi2 = m2 * lc2 * g * libm::cos(theta1 + theta2 - PI / 2.0);
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * libm::sin(theta2)
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * libm::sin(theta2)
        + (m1 * lc1 + m2 * l1) * g * libm::cos(theta1 - PI / 2.0)
        + phi2;
    let ddtheta2 = (a + d2 / d1 * phi1
        - m2 * l1 * lc2 * dtheta1 * dtheta1 * libm::sin(theta2)
        - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: [f64; 4], a: f64, dt: f64) -> [f64; 4] {
    let add = |x: [f64; 4], k: [f64; 4], h: f64| -> [f64; 4] {
        [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2], x[3] + h * k[3]]
    };
    let dt2 = dt / 2.0;
    let k1 = derivs(s, a);
    let k2 = derivs(add(s, k1, dt2), a);
    let k3 = derivs(add(s, k2, dt2), a);
    let k4 = derivs(add(s, k3, dt), a);
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Wraps `x` into `[m, M)` the way Gym's `wrap` helper does.
fn wrap(mut x: f64, m: f64, big_m: f64) -> f64 {
    let diff = big_m - m;
    while x > big_m {
        x -= diff;
    }
    while x < m {
        x += diff;
    }
    x
}

impl Dynamics for Acrobot {
    fn reset(&mut self, rng: &mut Rng) {
        for s in &mut self.state {
            *s = rng.uniform_range(-0.1, 0.1);
        }
    }

    fn advance(&mut self, action: &Action) -> (f64, bool) {
        let torque = discrete_action(action) as f64 - 1.0;
        let ns = rk4(self.state, torque, DT);
        self.state = [
            wrap(ns[0], -PI, PI),
            wrap(ns[1], -PI, PI),
            ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
            ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
        ];
        let [t1, t2, _, _] = self.state;
        let terminal = -libm::cos(t1) - libm::cos(t2 + t1) > 1.0;
        (if terminal { 0.0 } else { -1.0 }, terminal)
    }

    fn observe(&self) -> Vec<f64> {
        let [t1, t2, d1, d2] = self.state;
        vec![libm::cos(t1), libm::sin(t1), libm::cos(t2), libm::sin(t2), d1, d2]
    }
}
