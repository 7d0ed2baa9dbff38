use alloc::vec::Vec;

use crate::env::Action;
use crate::rng::Rng;
use crate::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq)]
pub enum ActionDistribution {
    Categorical { logits: Vec<f64> },
    Gaussian { mean: Vec<f64>, log_std: Vec<f64> },
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + libm::log(z.iter().map(|v| libm::exp(v - m)).sum::<f64>())
}

impl ActionDistribution {
    /// Softmax probabilities (categorical only; empty for Gaussian).
    pub fn probs(&self) -> Vec<f64> {
        match self {
            ActionDistribution::Categorical { logits } => {
                let lse = log_sum_exp(logits);
                logits.iter().map(|z| libm::exp(z - lse)).collect()
            }
            ActionDistribution::Gaussian { .. } => Vec::new(),
        }
    }

    pub fn log_prob(&self, action: &Action) -> Result<f64> {
        match (self, action) {
            (ActionDistribution::Categorical { logits }, Action::Discrete(a)) => {
                if *a >= logits.len() {
                    return Err(Error::Invalid(alloc::format!(
                        "action {a} outside {} categories",
                        logits.len()
                    )));
                }
                Ok(logits[*a] - log_sum_exp(logits))
            }
            (ActionDistribution::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                if x.len() != mean.len() {
                    return Err(Error::Shape("action dimension".into()));
                }
                Ok(mean
                    .iter()
                    .zip(log_std)
                    .zip(x)
                    .map(|((m, ls), x)| {
                        let z = (x - m) * libm::exp(-ls);
                        -0.5 * z * z - ls - HALF_LN_2PI
                    })
                    .sum())
            }
            _ => Err(Error::Invalid("action kind does not match distribution".into())),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            ActionDistribution::Categorical { logits } => {
                let lse = log_sum_exp(logits);
                -logits
                    .iter()
                    .map(|z| {
                        let lp = z - lse;
                        libm::exp(lp) * lp
                    })
                    .sum::<f64>()
            }
            ActionDistribution::Gaussian { log_std, .. } => {
                log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
            }
        }
    }

    /// Draws an action and returns it with its log-probability. Gaussian
    /// samples are unclipped; clipping to the action box happens at the
    /// environment boundary.
    pub fn sample(&self, rng: &mut Rng) -> (Action, f64) {
        match self {
            ActionDistribution::Categorical { .. } => {
                let probs = self.probs();
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut choice = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        choice = i;
                        break;
                    }
                }
                let action = Action::Discrete(choice);
                let lp = self.log_prob(&action).expect("index in range");
                (action, lp)
            }
            ActionDistribution::Gaussian { mean, log_std } => {
                let mut lp = 0.0;
                let x = mean
                    .iter()
                    .zip(log_std)
                    .map(|(m, ls)| {
                        let u = rng.normal();
                        lp += -0.5 * u * u - ls - HALF_LN_2PI;
                        m + libm::exp(*ls) * u
                    })
                    .collect();
                (Action::Continuous(x), lp)
            }
        }
    }

    /// Most likely action: argmax for categorical (lowest index on ties),
    /// the mean for Gaussian.
    pub fn mode(&self) -> Action {
        match self {
            ActionDistribution::Categorical { logits } => {
                let mut best = 0;
                for (i, z) in logits.iter().enumerate() {
                    if *z > logits[best] {
                        best = i;
                    }
                }
                Action::Discrete(best)
            }
            ActionDistribution::Gaussian { mean, .. } => Action::Continuous(mean.clone()),
        }
    }
}
