//! Large-sample Monte-Carlo policy gradient.

use alloc::vec::Vec;

use crate::env::{make_env, Action, EnvSpec, Environment};
use crate::nn::{forward, Architecture, Forward, LossWeights, ParameterVector};
use crate::rng::{derive_seed, Rng};
use crate::train::env_action;
use crate::{Error, Result};

/// Estimates `grad J(theta)` from complete episodes, stopping once the
/// cumulative step count reaches `total_env_steps`:
///
/// `g = (1/E) sum_episodes sum_t grad ln pi(a_t|s_t) * (G_t - V(s_t))`
///
/// where `G_t` is the `gamma`-discounted reward-to-go and `V` the value head.
pub fn estimate_policy_gradient_with<E: Environment>(
    env: &mut E,
    params: &ParameterVector,
    arch: &Architecture,
    total_env_steps: u64,
    gamma: f64,
    rng: &mut Rng,
) -> Result<ParameterVector> {
    if total_env_steps == 0 {
        return Err(Error::Invalid("total_env_steps must be positive".into()));
    }
    let space = env.action_space();
    let mut grad = params.zeros_like();
    let mut steps = 0u64;
    let mut episodes = 0u64;
    let mut trace: Vec<(Forward, Action, f64)> = Vec::new();
    while steps < total_env_steps {
        trace.clear();
        let mut obs = env.reset();
        loop {
            let fwd = forward(params, arch, &obs)?;
            let (action, _) = fwd.dist.sample(rng);
            let tr = env.step(&env_action(&action, space))?;
            steps += 1;
            trace.push((fwd, action, tr.reward));
            if tr.done {
                break;
            }
            obs = tr.observation;
        }
        let mut to_go = 0.0;
        for (fwd, action, reward) in trace.iter().rev() {
            to_go = reward + gamma * to_go;
            let w = LossWeights { log_prob: to_go - fwd.value, ..Default::default() };
            fwd.accumulate_gradient(params, arch, action, &w, &mut grad)?;
        }
        episodes += 1;
    }
    grad.scale(1.0 / episodes as f64);
    Ok(grad)
}

/// [`estimate_policy_gradient_with`] on a fresh classic-control instance;
/// the environment and action sampling draw from streams derived from `seed`.
pub fn estimate_policy_gradient(
    params: &ParameterVector,
    arch: &Architecture,
    spec: EnvSpec,
    total_env_steps: u64,
    gamma: f64,
    seed: u64,
) -> Result<ParameterVector> {
    let mut env = make_env(spec, derive_seed(seed, 0));
    let mut rng = Rng::new(derive_seed(seed, 1));
    estimate_policy_gradient_with(&mut env, params, arch, total_env_steps, gamma, &mut rng)
}
