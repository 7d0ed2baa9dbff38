//! A2C and PPO with plain fixed-step gradient updates.
//!
//! There is no optimizer state: a checkpoint is just parameters, and
//! restarting training from one is exact.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::env::{Action, ActionSpace, Environment};
use crate::gae::{compute_gae, RolloutBatch};
use crate::nn::{forward, Architecture, LossWeights, ParameterVector};
use crate::rng::{derive_seed, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    A2c,
    Ppo,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::A2c => "a2c",
            Algo::Ppo => "ppo",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a2c" => Ok(Algo::A2c),
            "ppo" => Ok(Algo::Ppo),
            other => Err(Error::Invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algo: Algo,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    /// Rollout length per update.
    pub n_steps: usize,
    pub ppo_epochs: usize,
    pub ppo_clip: f64,
    pub minibatch_count: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub total_steps: u64,
    pub checkpoint_interval: u64,
    pub seed: u64,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
}

impl TrainConfig {
    pub fn ppo() -> TrainConfig {
        TrainConfig {
            algo: Algo::Ppo,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 0.1,
            n_steps: 256,
            ppo_epochs: 10,
            ppo_clip: 0.2,
            minibatch_count: 4,
            value_coef: 0.5,
            entropy_coef: 0.0,
            total_steps: 150_000,
            checkpoint_interval: 10_000,
            seed: 0,
            max_grad_norm: 0.5,
            normalize_advantages: true,
        }
    }

    pub fn a2c() -> TrainConfig {
        TrainConfig {
            algo: Algo::A2c,
            gae_lambda: 1.0,
            learning_rate: 0.05,
            n_steps: 8,
            normalize_advantages: false,
            ..Self::ppo()
        }
    }

    pub fn for_algo(algo: Algo) -> TrainConfig {
        match algo {
            Algo::A2c => Self::a2c(),
            Algo::Ppo => Self::ppo(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must be in [0, 1]");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be a finite non-negative number");
        }
        if self.n_steps == 0 || self.ppo_epochs == 0 || self.minibatch_count == 0 {
            return bad("n_steps, ppo_epochs and minibatch_count must be positive");
        }
        if !(self.ppo_clip > 0.0) {
            return bad("ppo_clip must be positive");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if self.total_steps == 0 || self.checkpoint_interval == 0 {
            return bad("total_steps and checkpoint_interval must be positive");
        }
        if self.checkpoint_interval > self.total_steps {
            return bad("checkpoint_interval must not exceed total_steps");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub gradient_steps: usize,
}

/// Clips a Gaussian sample into the action box. The log-probability of the
/// unclipped sample is what the learner keeps.
pub fn env_action(action: &Action, space: ActionSpace) -> Action {
    match (action, space) {
        (Action::Continuous(v), ActionSpace::Box { low, high, .. }) => {
            Action::Continuous(v.iter().map(|x| x.clamp(low, high)).collect())
        }
        _ => action.clone(),
    }
}

/// Shifts and scales in place to zero mean and unit population std. A
/// constant vector is only centred.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    for a in adv.iter_mut() {
        *a -= mean;
    }
    let std = libm::sqrt(adv.iter().map(|a| a * a).sum::<f64>() / n);
    if std > 1e-12 {
        for a in adv.iter_mut() {
            *a /= std;
        }
    }
}

/// Rescales `grad` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grad: &mut ParameterVector, max_norm: f64) -> f64 {
    let norm = grad.norm();
    if norm > max_norm {
        grad.scale(max_norm / norm);
    }
    norm
}

fn apply_step(params: &mut ParameterVector, grad: &mut ParameterVector, config: &TrainConfig) -> f64 {
    let norm = clip_grad_norm(grad, config.max_grad_norm);
    if config.learning_rate != 0.0 {
        params.axpy(-config.learning_rate, grad);
    }
    norm
}

/// Gradient of the A2C loss
/// `-mean(ln pi(a|s) A) + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`
/// and the loss terms.
pub fn a2c_loss_gradient(
    params: &ParameterVector,
    arch: &Architecture,
    batch: &RolloutBatch,
    advantages: &[f64],
    returns: &[f64],
    config: &TrainConfig,
) -> Result<(ParameterVector, UpdateStats)> {
    let m = batch.len() as f64;
    let mut grad = params.zeros_like();
    let mut stats = UpdateStats::default();
    for t in 0..batch.len() {
        let fwd = forward(params, arch, &batch.observations[t])?;
        let lp = fwd.dist.log_prob(&batch.actions[t])?;
        let ent = fwd.dist.entropy();
        stats.policy_loss -= lp * advantages[t] / m;
        stats.value_loss += (fwd.value - returns[t]) * (fwd.value - returns[t]) / m;
        stats.entropy += ent / m;
        let w = LossWeights {
            log_prob: -advantages[t] / m,
            entropy: -config.entropy_coef / m,
            value: config.value_coef / m,
            value_target: returns[t],
        };
        fwd.accumulate_gradient(params, arch, &batch.actions[t], &w, &mut grad)?;
    }
    Ok((grad, stats))
}

fn check_finite(stats: &UpdateStats, grad: &ParameterVector, what: &str) -> Result<()> {
    let loss_ok = stats.policy_loss.is_finite() && stats.value_loss.is_finite();
    if !loss_ok || !grad.is_finite() {
        return Err(Error::NonFinite(format!(
            "{what}: policy_loss={} value_loss={} entropy={} grad_finite={}",
            stats.policy_loss,
            stats.value_loss,
            stats.entropy,
            grad.is_finite()
        )));
    }
    Ok(())
}

/// One clipped-gradient SGD step on the A2C loss.
pub fn a2c_update(
    params: &ParameterVector,
    arch: &Architecture,
    batch: &RolloutBatch,
    advantages: &[f64],
    returns: &[f64],
    config: &TrainConfig,
) -> Result<(ParameterVector, UpdateStats)> {
    let (mut grad, mut stats) = a2c_loss_gradient(params, arch, batch, advantages, returns, config)?;
    check_finite(&stats, &grad, "a2c update")?;
    let mut next = params.clone();
    stats.grad_norm = apply_step(&mut next, &mut grad, config);
    stats.gradient_steps = 1;
    Ok((next, stats))
}

/// Per-sample clipped surrogate `min(rho A, clip(rho, 1-eps, 1+eps) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    unclipped.min(clipped)
}

/// Gradient of the negated PPO objective on the samples `idx`:
/// `-mean(min(rho A, clip(rho) A)) + value_coef * MSE - entropy_coef * mean(H)`.
pub fn ppo_loss_gradient(
    params: &ParameterVector,
    arch: &Architecture,
    batch: &RolloutBatch,
    advantages: &[f64],
    returns: &[f64],
    idx: &[usize],
    config: &TrainConfig,
) -> Result<(ParameterVector, UpdateStats)> {
    let m = idx.len() as f64;
    let mut grad = params.zeros_like();
    let mut stats = UpdateStats::default();
    let mut clipped = 0usize;
    for &t in idx {
        let fwd = forward(params, arch, &batch.observations[t])?;
        let lp = fwd.dist.log_prob(&batch.actions[t])?;
        let log_ratio = lp - batch.log_probs[t];
        let ratio = libm::exp(log_ratio);
        let a = advantages[t];
        let surrogate = clipped_surrogate(ratio, a, config.ppo_clip);
        // The gradient flows only through the unclipped branch when it is the minimum.
        let active = ratio * a <= surrogate;
        if !active {
            clipped += 1;
        }
        stats.policy_loss -= surrogate / m;
        stats.value_loss += (fwd.value - returns[t]) * (fwd.value - returns[t]) / m;
        let ent = fwd.dist.entropy();
        stats.entropy += ent / m;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) / m;
        let w = LossWeights {
            log_prob: if active { -ratio * a / m } else { 0.0 },
            entropy: -config.entropy_coef / m,
            value: config.value_coef / m,
            value_target: returns[t],
        };
        fwd.accumulate_gradient(params, arch, &batch.actions[t], &w, &mut grad)?;
    }
    stats.clip_fraction = clipped as f64 / m;
    Ok((grad, stats))
}

/// `ppo_epochs` passes of shuffled minibatch steps on one rollout.
/// Advantages are normalized here when the config asks for it.
pub fn ppo_update(
    params: &ParameterVector,
    arch: &Architecture,
    batch: &RolloutBatch,
    advantages: &[f64],
    returns: &[f64],
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(ParameterVector, UpdateStats)> {
    let mut adv = advantages.to_vec();
    if config.normalize_advantages {
        normalize_advantages(&mut adv);
    }
    let n = batch.len();
    let mb_count = config.minibatch_count.min(n).max(1);
    let mut next = params.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = UpdateStats::default();
    for _ in 0..config.ppo_epochs {
        rng.shuffle(&mut order);
        for k in 0..mb_count {
            let lo = k * n / mb_count;
            let hi = (k + 1) * n / mb_count;
            let (mut grad, stats) =
                ppo_loss_gradient(&next, arch, batch, &adv, returns, &order[lo..hi], config)?;
            check_finite(&stats, &grad, "ppo update")?;
            let norm = apply_step(&mut next, &mut grad, config);
            let s = total.gradient_steps as f64;
            let avg = |acc: f64, x: f64| (acc * s + x) / (s + 1.0);
            total.policy_loss = avg(total.policy_loss, stats.policy_loss);
            total.value_loss = avg(total.value_loss, stats.value_loss);
            total.entropy = avg(total.entropy, stats.entropy);
            total.clip_fraction = avg(total.clip_fraction, stats.clip_fraction);
            total.approx_kl = avg(total.approx_kl, stats.approx_kl);
            total.grad_norm = avg(total.grad_norm, norm);
            total.gradient_steps += 1;
        }
    }
    Ok((next, total))
}

/// Parameters at a checkpoint boundary together with recent training returns.
#[derive(Debug, Clone, Copy)]
pub struct CheckpointEvent<'a> {
    pub step: u64,
    pub params: &'a ParameterVector,
    /// Mean of the last (up to) 100 completed episode returns.
    pub mean_return: Option<f64>,
    pub episodes: usize,
}

const RETURN_WINDOW: usize = 100;

/// Single-environment on-policy trainer.
#[derive(Debug, Clone)]
pub struct Trainer<E> {
    env: E,
    arch: Architecture,
    config: TrainConfig,
    params: ParameterVector,
    policy_rng: Rng,
    update_rng: Rng,
    steps: u64,
    obs: Vec<f64>,
    episode_return: f64,
    recent_returns: VecDeque<f64>,
    completed_episodes: usize,
}

impl<E: Environment> Trainer<E> {
    /// Starts from fresh parameters initialised from `config.seed`.
    pub fn new(env: E, arch: Architecture, config: TrainConfig) -> Result<Self> {
        arch.validate()?;
        let params = ParameterVector::init(&arch, &mut Rng::new(derive_seed(config.seed, 0)));
        Self::from_params(env, arch, params, config)
    }

    /// Continues training from existing parameters.
    pub fn from_params(
        mut env: E,
        arch: Architecture,
        params: ParameterVector,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if arch.obs_dim != env.obs_dim() {
            return Err(Error::Shape("architecture does not match environment".into()));
        }
        params.check_shape(&ParameterVector::zeros(&arch))?;
        let obs = env.reset();
        Ok(Trainer {
            env,
            policy_rng: Rng::new(derive_seed(config.seed, 1)),
            update_rng: Rng::new(derive_seed(config.seed, 2)),
            arch,
            config,
            params,
            steps: 0,
            obs,
            episode_return: 0.0,
            recent_returns: VecDeque::with_capacity(RETURN_WINDOW),
            completed_episodes: 0,
        })
    }

    pub fn params(&self) -> &ParameterVector {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn completed_episodes(&self) -> usize {
        self.completed_episodes
    }

    pub fn mean_recent_return(&self) -> Option<f64> {
        if self.recent_returns.is_empty() {
            None
        } else {
            Some(self.recent_returns.iter().sum::<f64>() / self.recent_returns.len() as f64)
        }
    }

    /// Collects `n` environment steps with the current policy.
    pub fn collect_rollout(&mut self, n: usize) -> Result<RolloutBatch> {
        let space = self.env.action_space();
        let mut batch = RolloutBatch::default();
        for _ in 0..n {
            let fwd = forward(&self.params, &self.arch, &self.obs)?;
            let (action, log_prob) = fwd.dist.sample(&mut self.policy_rng);
            let tr = self.env.step(&env_action(&action, space))?;
            self.steps += 1;
            self.episode_return += tr.reward;
            let obs = core::mem::replace(&mut self.obs, tr.observation);
            batch.observations.push(obs);
            batch.actions.push(action);
            batch.log_probs.push(log_prob);
            batch.rewards.push(tr.reward);
            batch.dones.push(tr.done);
            batch.values.push(fwd.value);
            if tr.done {
                if self.recent_returns.len() == RETURN_WINDOW {
                    self.recent_returns.pop_front();
                }
                self.recent_returns.push_back(self.episode_return);
                self.completed_episodes += 1;
                self.episode_return = 0.0;
                self.obs = self.env.reset();
            }
        }
        batch.bootstrap_value = if batch.dones.last().copied().unwrap_or(true) {
            0.0
        } else {
            forward(&self.params, &self.arch, &self.obs)?.value
        };
        Ok(batch)
    }

    /// Collects one rollout of up to `n_steps` and applies the algorithm's update.
    pub fn train_rollout(&mut self, len: usize) -> Result<UpdateStats> {
        let batch = self.collect_rollout(len)?;
        let (adv, ret) = compute_gae(&batch, self.config.gamma, self.config.gae_lambda);
        let (next, stats) = match self.config.algo {
            Algo::A2c => {
                let mut adv = adv;
                if self.config.normalize_advantages {
                    normalize_advantages(&mut adv);
                }
                a2c_update(&self.params, &self.arch, &batch, &adv, &ret, &self.config)?
            }
            Algo::Ppo => ppo_update(
                &self.params,
                &self.arch,
                &batch,
                &adv,
                &ret,
                &self.config,
                &mut self.update_rng,
            )?,
        };
        self.params = next;
        Ok(stats)
    }

    /// Trains for `steps` more environment steps in rollouts of `n_steps`
    /// (the last one shorter if needed), without checkpoints.
    pub fn train_steps(&mut self, steps: u64) -> Result<()> {
        let end = self.steps + steps;
        while self.steps < end {
            let len = (end - self.steps).min(self.config.n_steps as u64) as usize;
            self.train_rollout(len)?;
        }
        Ok(())
    }

    /// Runs `config.total_steps` environment steps. `on_checkpoint` sees the
    /// initial parameters (step 0), the first parameters at or past every
    /// multiple of `checkpoint_interval`, and the final parameters.
    pub fn run<F, X>(&mut self, mut on_checkpoint: F) -> core::result::Result<(), X>
    where
        F: FnMut(CheckpointEvent<'_>) -> core::result::Result<(), X>,
        X: From<Error>,
    {
        let total = self.config.total_steps;
        let interval = self.config.checkpoint_interval;
        let mut last = self.steps;
        let mut next_ckpt = self.steps + interval;
        self.emit(&mut on_checkpoint)?;
        while self.steps < total {
            let len = (total - self.steps).min(self.config.n_steps as u64) as usize;
            self.train_rollout(len)?;
            if self.steps >= next_ckpt || self.steps == total {
                while next_ckpt <= self.steps {
                    next_ckpt += interval;
                }
                if self.steps != last {
                    self.emit(&mut on_checkpoint)?;
                    last = self.steps;
                }
            }
        }
        Ok(())
    }

    fn emit<F, X>(&self, on_checkpoint: &mut F) -> core::result::Result<(), X>
    where
        F: FnMut(CheckpointEvent<'_>) -> core::result::Result<(), X>,
    {
        on_checkpoint(CheckpointEvent {
            step: self.steps,
            params: &self.params,
            mean_return: self.mean_recent_return(),
            episodes: self.recent_returns.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_env, EnvName, EnvSpec};
    use alloc::vec;

    #[test]
    fn clip_arithmetic() {
        assert!((clipped_surrogate(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_surrogate(0.5, -1.0, 0.2) - -0.8).abs() < 1e-15);
        assert_eq!(clipped_surrogate(1.0, 3.0, 0.2), 3.0);
    }

    #[test]
    fn advantage_normalization_moments() {
        let mut rng = Rng::new(4);
        for _ in 0..20 {
            let mut adv: Vec<f64> = (0..257).map(|_| 5.0 + 3.0 * rng.normal()).collect();
            normalize_advantages(&mut adv);
            let n = adv.len() as f64;
            let mean = adv.iter().sum::<f64>() / n;
            let std = libm::sqrt(adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n);
            assert!(mean.abs() < 1e-10);
            assert!((std - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::ppo();
        assert!(c.validate().is_ok());
        c.checkpoint_interval = c.total_steps + 1;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::a2c();
        c.gamma = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn checkpoint_counting() {
        let spec = EnvSpec::of(EnvName::CartPole);
        let arch = Architecture::with_hidden(&spec, vec![8]);
        let config = TrainConfig {
            total_steps: 300,
            checkpoint_interval: 300,
            n_steps: 64,
            ..TrainConfig::ppo()
        };
        let mut trainer = Trainer::new(make_env(spec, 0), arch, config).unwrap();
        let mut steps = Vec::new();
        trainer
            .run(|e| {
                steps.push(e.step);
                Ok::<_, Error>(())
            })
            .unwrap();
        assert_eq!(steps, vec![0, 300]);
    }

    #[test]
    fn irregular_interval_labels_actual_steps() {
        let spec = EnvSpec::of(EnvName::CartPole);
        let arch = Architecture::with_hidden(&spec, vec![8]);
        let config = TrainConfig {
            total_steps: 500,
            checkpoint_interval: 150,
            n_steps: 100,
            ..TrainConfig::a2c()
        };
        let mut trainer = Trainer::new(make_env(spec, 0), arch, config).unwrap();
        let mut steps = Vec::new();
        trainer
            .run(|e| {
                steps.push(e.step);
                Ok::<_, Error>(())
            })
            .unwrap();
        assert_eq!(steps, vec![0, 200, 300, 500]);
    }
}
