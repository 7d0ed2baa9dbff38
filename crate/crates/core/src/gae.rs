//! Generalized advantage estimation.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::Action;

/// One on-policy rollout of `len()` consecutive steps from a single
/// environment. `dones[t]` marks that the episode ended at step `t`
/// (terminal or truncated); `bootstrap_value` is `V(s_n)` for the state
/// after the last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    pub bootstrap_value: f64,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.observations.len() == n
            && self.actions.len() == n
            && self.log_probs.len() == n
            && self.dones.len() == n
            && self.values.len() == n
    }
}

/// Returns `(advantages, returns)`:
///
/// `delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)`,
/// `A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}`,
/// `returns_t = A_t + V(s_t)`.
pub fn compute_gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = batch.len();
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = batch.bootstrap_value;
    for t in (0..n).rev() {
        let live = if batch.dones[t] { 0.0 } else { 1.0 };
        let delta = batch.rewards[t] + gamma * next_value * live - batch.values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = batch.values[t];
    }
    let returns = advantages.iter().zip(&batch.values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}
