#![allow(dead_code)]

use rsurf_core::env::{Action, ActionSpace, EnvError, EnvName, EnvSpec, Environment, Transition};
use rsurf_core::nn::{Architecture, ParameterVector};
use rsurf_core::rng::Rng;

/// One-step, single-state bandit with a fixed reward per arm.
pub struct Bandit {
    pub rewards: Vec<f64>,
}

impl Environment for Bandit {
    fn obs_dim(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(self.rewards.len())
    }

    fn reset(&mut self) -> Vec<f64> {
        vec![1.0]
    }

    fn step(&mut self, action: &Action) -> Result<Transition, EnvError> {
        match action {
            Action::Discrete(a) if *a < self.rewards.len() => {
                Ok(Transition { observation: vec![1.0], reward: self.rewards[*a], done: true, truncated: false })
            }
            _ => Err(EnvError::ActionOutOfBounds(EnvName::CartPole)),
        }
    }
}

pub fn bandit_arch(arms: usize) -> Architecture {
    let mut a = Architecture::with_hidden(&EnvSpec::of(EnvName::CartPole), vec![4]);
    a.obs_dim = 1;
    a.head = rsurf_core::nn::Head::Categorical { n: arms };
    a
}

/// Parameters with every entry drawn from `N(0, scale^2)`.
pub fn random_params(arch: &Architecture, scale: f64, rng: &mut Rng) -> ParameterVector {
    let mut p = ParameterVector::zeros(arch);
    for v in p.values_mut() {
        *v = scale * rng.normal();
    }
    p
}

/// A small architecture zoo: shared/split trunks, categorical/Gaussian heads.
pub fn architectures() -> Vec<Architecture> {
    let mut out = Vec::new();
    for (name, hidden, shared) in [
        (EnvName::CartPole, vec![6, 5], true),
        (EnvName::CartPole, vec![7], false),
        (EnvName::Acrobot, vec![5, 4], false),
        (EnvName::Pendulum, vec![6, 3], true),
        (EnvName::MountainCarContinuous, vec![4, 4, 3], false),
    ] {
        let mut a = Architecture::with_hidden(&EnvSpec::of(name), hidden);
        a.shared_trunk = shared;
        out.push(a);
    }
    out
}

pub fn random_action(arch: &Architecture, rng: &mut Rng) -> Action {
    match arch.head {
        rsurf_core::nn::Head::Categorical { n } => Action::Discrete(rng.below(n)),
        rsurf_core::nn::Head::Gaussian { dim } => Action::Continuous((0..dim).map(|_| 1.5 * rng.normal()).collect()),
    }
}

pub fn random_obs(arch: &Architecture, rng: &mut Rng) -> Vec<f64> {
    (0..arch.obs_dim).map(|_| rng.normal()).collect()
}

/// Largest relative gap over coordinates where either side exceeds `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .filter(|(a, n)| a.abs() > floor || n.abs() > floor)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()))
        .fold(0.0, f64::max)
}

/// Central differences of `f` with respect to every parameter.
pub fn finite_differences(
    params: &ParameterVector,
    arch: &Architecture,
    h: f64,
    f: impl Fn(&ParameterVector) -> f64,
) -> Vec<f64> {
    let flat = params.flatten();
    (0..flat.len())
        .map(|k| {
            let mut up = flat.clone();
            let mut down = flat.clone();
            up[k] += h;
            down[k] -= h;
            let pu = ParameterVector::unflatten(arch, &up).unwrap();
            let pd = ParameterVector::unflatten(arch, &down).unwrap();
            (f(&pu) - f(&pd)) / (2.0 * h)
        })
        .collect()
}
