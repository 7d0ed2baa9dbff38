//! Classic-control environments with seedable, bit-reproducible dynamics.
//!
//! | name                     | obs | action          | time limit |
//! |--------------------------|-----|-----------------|------------|
//! | `cartpole` (v1)          | 4   | Discrete(2)     | 500        |
//! | `acrobot` (v1)           | 6   | Discrete(3)     | 500        |
//! | `mountaincar` (v0)       | 2   | Discrete(3)     | 200        |
//! | `mountaincar_continuous` | 2   | Box(1, -1, 1)   | 999        |
//! | `pendulum` (v0)          | 3   | Box(1, -2, 2)   | 200        |
//!
//! Hitting the time limit reports `done = true, truncated = true`.

mod acrobot;
mod cartpole;
mod mountain_car;
mod pendulum;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::rng::Rng;

pub use acrobot::Acrobot;
pub use cartpole::CartPole;
pub use mountain_car::{ContinuousMountainCar, MountainCar};
pub use pendulum::Pendulum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
    #[error("action out of bounds for {0}")]
    ActionOutOfBounds(EnvName),
    #[error("step called after episode end")]
    StepAfterDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvName {
    CartPole,
    Acrobot,
    MountainCar,
    MountainCarContinuous,
    Pendulum,
}

impl EnvName {
    pub const ALL: [EnvName; 5] = [
        EnvName::CartPole,
        EnvName::Acrobot,
        EnvName::MountainCar,
        EnvName::MountainCarContinuous,
        EnvName::Pendulum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::CartPole => "cartpole",
            EnvName::Acrobot => "acrobot",
            EnvName::MountainCar => "mountaincar",
            EnvName::MountainCarContinuous => "mountaincar_continuous",
            EnvName::Pendulum => "pendulum",
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| EnvError::UnknownEnv(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionSpace {
    Discrete(usize),
    Box { dim: usize, low: f64, high: f64 },
}

impl ActionSpace {
    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete(n), Action::Discrete(a)) => a < n,
            (ActionSpace::Box { dim, low, high }, Action::Continuous(v)) => {
                v.len() == *dim && v.iter().all(|x| *x >= *low && *x <= *high)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSpec {
    pub name: EnvName,
    pub obs_dim: usize,
    pub action_space: ActionSpace,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn of(name: EnvName) -> EnvSpec {
        let (obs_dim, action_space, max_episode_steps) = match name {
            EnvName::CartPole => (4, ActionSpace::Discrete(2), 500),
            EnvName::Acrobot => (6, ActionSpace::Discrete(3), 500),
            EnvName::MountainCar => (2, ActionSpace::Discrete(3), 200),
            EnvName::MountainCarContinuous => (
                2,
                ActionSpace::Box { dim: 1, low: -1.0, high: 1.0 },
                999,
            ),
            EnvName::Pendulum => (3, ActionSpace::Box { dim: 1, low: -2.0, high: 2.0 }, 200),
        };
        EnvSpec { name, obs_dim, action_space, max_episode_steps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
}

/// Anything the rollout code can drive. Classic-control instances implement
/// it, and tests plug in bandits and other toy problems.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: &Action) -> Result<Transition, EnvError>;
}

/// Raw dynamics of one classic-control system, without time limits.
pub(crate) trait Dynamics {
    fn reset(&mut self, rng: &mut Rng);
    /// Returns `(reward, terminal)`. The action is already validated.
    fn advance(&mut self, action: &Action) -> (f64, bool);
    fn observe(&self) -> Vec<f64>;
}

#[derive(Debug, Clone)]
enum System {
    CartPole(CartPole),
    Acrobot(Acrobot),
    MountainCar(MountainCar),
    MountainCarContinuous(ContinuousMountainCar),
    Pendulum(Pendulum),
}

impl System {
    fn dynamics(&mut self) -> &mut dyn Dynamics {
        match self {
            System::CartPole(s) => s,
            System::Acrobot(s) => s,
            System::MountainCar(s) => s,
            System::MountainCarContinuous(s) => s,
            System::Pendulum(s) => s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnvInstance {
    spec: EnvSpec,
    system: System,
    steps_elapsed: usize,
    done: bool,
    rng: Rng,
}

/// Builds an environment whose reset/step sequence is a pure function of
/// `seed` and the actions applied.
pub fn make_env(spec: EnvSpec, seed: u64) -> EnvInstance {
    let system = match spec.name {
        EnvName::CartPole => System::CartPole(CartPole::default()),
        EnvName::Acrobot => System::Acrobot(Acrobot::default()),
        EnvName::MountainCar => System::MountainCar(MountainCar::default()),
        EnvName::MountainCarContinuous => {
            System::MountainCarContinuous(ContinuousMountainCar::default())
        }
        EnvName::Pendulum => System::Pendulum(Pendulum::default()),
    };
    EnvInstance { spec, system, steps_elapsed: 0, done: true, rng: Rng::new(seed) }
}

impl EnvInstance {
    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn steps_elapsed(&self) -> usize {
        self.steps_elapsed
    }

    /// Internal physical state, e.g. `[x, x_dot, theta, theta_dot]` for cartpole.
    pub fn state(&self) -> Vec<f64> {
        match &self.system {
            System::CartPole(s) => s.state.to_vec(),
            System::Acrobot(s) => s.state.to_vec(),
            System::MountainCar(s) => s.state.to_vec(),
            System::MountainCarContinuous(s) => s.state.to_vec(),
            System::Pendulum(s) => s.state.to_vec(),
        }
    }

    /// Overwrites the physical state and starts a fresh episode from it.
    pub fn set_state(&mut self, state: &[f64]) {
        fn copy<const N: usize>(dst: &mut [f64; N], src: &[f64]) {
            dst.copy_from_slice(&src[..N]);
        }
        match &mut self.system {
            System::CartPole(s) => copy(&mut s.state, state),
            System::Acrobot(s) => copy(&mut s.state, state),
            System::MountainCar(s) => copy(&mut s.state, state),
            System::MountainCarContinuous(s) => copy(&mut s.state, state),
            System::Pendulum(s) => copy(&mut s.state, state),
        }
        self.steps_elapsed = 0;
        self.done = false;
    }

    pub fn observe(&mut self) -> Vec<f64> {
        self.system.dynamics().observe()
    }
}

impl Environment for EnvInstance {
    fn obs_dim(&self) -> usize {
        self.spec.obs_dim
    }

    fn action_space(&self) -> ActionSpace {
        self.spec.action_space
    }

    fn reset(&mut self) -> Vec<f64> {
        let dynamics = self.system.dynamics();
        dynamics.reset(&mut self.rng);
        self.steps_elapsed = 0;
        self.done = false;
        dynamics.observe()
    }

    fn step(&mut self, action: &Action) -> Result<Transition, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        if !self.spec.action_space.contains(action) {
            return Err(EnvError::ActionOutOfBounds(self.spec.name));
        }
        let dynamics = self.system.dynamics();
        let (reward, terminal) = dynamics.advance(action);
        let observation = dynamics.observe();
        self.steps_elapsed += 1;
        let truncated = !terminal && self.steps_elapsed >= self.spec.max_episode_steps;
        self.done = terminal || truncated;
        Ok(Transition { observation, reward, done: self.done, truncated })
    }
}

fn scalar_action(action: &Action) -> f64 {
    match action {
        Action::Continuous(v) => v[0],
        Action::Discrete(a) => *a as f64,
    }
}

fn discrete_action(action: &Action) -> usize {
    match action {
        Action::Discrete(a) => *a,
        Action::Continuous(_) => unreachable!("validated against a discrete space"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn canonical_dimensions() {
        let cp = make_env(EnvSpec::of(EnvName::CartPole), 3);
        assert_eq!(cp.obs_dim(), 4);
        let pd = make_env(EnvSpec::of(EnvName::Pendulum), 3);
        assert_eq!(pd.action_space(), ActionSpace::Box { dim: 1, low: -2.0, high: 2.0 });
        assert_eq!(EnvSpec::of(EnvName::MountainCarContinuous).max_episode_steps, 999);
    }

    #[test]
    fn names_round_trip() {
        for name in EnvName::ALL {
            assert_eq!(name.as_str().parse::<EnvName>().unwrap(), name);
        }
        assert!(matches!("pong".parse::<EnvName>(), Err(EnvError::UnknownEnv(_))));
    }

    #[test]
    fn identical_seeds_identical_trajectories() {
        for name in EnvName::ALL {
            let spec = EnvSpec::of(name);
            let mut a = make_env(spec, 0);
            let mut b = make_env(spec, 0);
            assert_eq!(a.reset(), b.reset());
            let action = match spec.action_space {
                ActionSpace::Discrete(_) => Action::Discrete(1),
                ActionSpace::Box { .. } => Action::Continuous(vec![0.5]),
            };
            for _ in 0..50 {
                let ta = a.step(&action).unwrap();
                let tb = b.step(&action).unwrap();
                assert_eq!(ta, tb);
                if ta.done {
                    break;
                }
            }
        }
    }

    #[test]
    fn out_of_bounds_and_after_done() {
        let mut env = make_env(EnvSpec::of(EnvName::CartPole), 1);
        assert_eq!(env.step(&Action::Discrete(0)), Err(EnvError::StepAfterDone));
        env.reset();
        assert_eq!(
            env.step(&Action::Discrete(2)),
            Err(EnvError::ActionOutOfBounds(EnvName::CartPole))
        );
        let mut pd = make_env(EnvSpec::of(EnvName::Pendulum), 1);
        pd.reset();
        assert!(pd.step(&Action::Continuous(vec![2.5])).is_err());
        assert!(pd.step(&Action::Continuous(vec![f64::NAN])).is_err());
        assert!(pd.step(&Action::Discrete(0)).is_err());
    }

    #[test]
    fn episodes_end_within_time_limit() {
        for name in EnvName::ALL {
            let spec = EnvSpec::of(name);
            let mut env = make_env(spec, 11);
            let mut rng = Rng::new(5);
            env.reset();
            let mut n = 0;
            loop {
                let action = match spec.action_space {
                    ActionSpace::Discrete(k) => Action::Discrete(rng.below(k)),
                    ActionSpace::Box { low, high, .. } => {
                        Action::Continuous(vec![rng.uniform_range(low, high)])
                    }
                };
                let t = env.step(&action).unwrap();
                n += 1;
                assert!(t.reward.is_finite());
                if t.done {
                    assert!(n <= spec.max_episode_steps);
                    if t.truncated {
                        assert_eq!(n, spec.max_episode_steps);
                    }
                    break;
                }
            }
        }
    }
}
