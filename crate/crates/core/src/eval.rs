//! Monte-Carlo policy evaluation and grid geometry.

use alloc::vec::Vec;

use crate::direction::{perturb, Direction};
use crate::env::{make_env, EnvSpec, Environment};
use crate::nn::{forward, Architecture, ParameterVector};
use crate::rng::{derive_seed, Rng};
use crate::train::env_action;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalBudget {
    pub min_steps: u64,
    pub min_episodes: u64,
    pub gamma_eval: f64,
    pub seed: u64,
}

impl EvalBudget {
    pub fn steps(min_steps: u64, seed: u64) -> EvalBudget {
        EvalBudget { min_steps, min_episodes: 1, gamma_eval: 1.0, seed }
    }

    pub fn episodes(min_episodes: u64, seed: u64) -> EvalBudget {
        EvalBudget { min_steps: 1, min_episodes, gamma_eval: 1.0, seed }
    }

    pub fn with_seed(self, seed: u64) -> EvalBudget {
        EvalBudget { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_steps == 0 || self.min_episodes == 0 {
            return Err(Error::Invalid("evaluation budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActionMode {
    #[default]
    Stochastic,
    Deterministic,
}

/// Statistics of per-episode returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStatistic {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for one episode.
    pub std: f64,
    pub stderr: f64,
    pub episodes: u64,
    pub steps: u64,
}

impl EvalStatistic {
    pub fn from_returns(returns: &[f64], steps: u64) -> EvalStatistic {
        let n = returns.len();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            libm::sqrt(returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64)
        } else {
            0.0
        };
        EvalStatistic {
            mean,
            std,
            stderr: std / libm::sqrt(n as f64),
            episodes: n as u64,
            steps,
        }
    }

    /// Only one episode was run, so `std` and `stderr` carry no information.
    pub fn single_episode(&self) -> bool {
        self.episodes == 1
    }
}

/// Runs whole episodes until both budget minima are met; the last episode
/// always runs to its end.
pub fn evaluate_with<E: Environment>(
    env: &mut E,
    params: &ParameterVector,
    arch: &Architecture,
    budget: &EvalBudget,
    mode: ActionMode,
    rng: &mut Rng,
) -> Result<EvalStatistic> {
    budget.validate()?;
    let space = env.action_space();
    let mut returns = Vec::new();
    let mut steps = 0u64;
    while steps < budget.min_steps || (returns.len() as u64) < budget.min_episodes {
        let mut obs = env.reset();
        let mut ret = 0.0;
        let mut discount = 1.0;
        loop {
            let fwd = forward(params, arch, &obs)?;
            let action = match mode {
                ActionMode::Stochastic => fwd.dist.sample(rng).0,
                ActionMode::Deterministic => fwd.dist.mode(),
            };
            let tr = env.step(&env_action(&action, space))?;
            steps += 1;
            ret += discount * tr.reward;
            discount *= budget.gamma_eval;
            if tr.done {
                break;
            }
            obs = tr.observation;
        }
        returns.push(ret);
    }
    Ok(EvalStatistic::from_returns(&returns, steps))
}

/// Evaluates `params` on a fresh instance of `spec`. Environment and policy
/// randomness come from streams 0 and 1 derived from `budget.seed`.
pub fn evaluate(
    params: &ParameterVector,
    arch: &Architecture,
    spec: EnvSpec,
    budget: &EvalBudget,
    mode: ActionMode,
) -> Result<EvalStatistic> {
    if !arch.matches(&spec) {
        return Err(Error::Shape("checkpoint architecture does not match environment".into()));
    }
    let mut env = make_env(spec, derive_seed(budget.seed, 0));
    let mut rng = Rng::new(derive_seed(budget.seed, 1));
    evaluate_with(&mut env, params, arch, budget, mode, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Offsets span `[-range, range]` on both axes.
    pub range: f64,
    /// Odd, so `(0, 0)` is a lattice point.
    pub samples_per_axis: usize,
    pub budget: EvalBudget,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::Invalid("grid range must be positive".into()));
        }
        if self.samples_per_axis % 2 == 0 {
            return Err(Error::Invalid("samples per axis must be odd".into()));
        }
        self.budget.validate()
    }

    /// Axis lattice `-R .. R`; the centre entry is exactly 0.
    pub fn offsets(&self) -> Vec<f64> {
        let n = self.samples_per_axis;
        if n == 1 {
            return alloc::vec![0.0];
        }
        let half = (n - 1) as i64;
        (0..n as i64).map(|k| self.range * (2 * k - half) as f64 / half as f64).collect()
    }

    pub fn center(&self) -> usize {
        self.samples_per_axis / 2
    }

    /// Flattened index of cell `(i, j)`; `i` indexes the first direction.
    pub fn point_index(&self, i: usize, j: usize) -> usize {
        i * self.samples_per_axis + j
    }

    pub fn point_seed(&self, i: usize, j: usize) -> u64 {
        derive_seed(self.budget.seed, self.point_index(i, j) as u64)
    }

    pub fn cell_count(&self) -> usize {
        self.samples_per_axis * self.samples_per_axis
    }
}

/// Evaluates one lattice point of a two-direction grid with its own seed.
pub fn evaluate_grid_point(
    theta: &ParameterVector,
    arch: &Architecture,
    spec: EnvSpec,
    d1: &Direction,
    d2: &Direction,
    grid: &GridSpec,
    i: usize,
    j: usize,
) -> Result<EvalStatistic> {
    let offsets = grid.offsets();
    let params = perturb(theta, d1, offsets[i], Some((d2, offsets[j])))?;
    let budget = grid.budget.with_seed(grid.point_seed(i, j));
    evaluate(&params, arch, spec, &budget, ActionMode::Stochastic)
}
