//! Small tanh actor-critic with hand-written forward and backward passes.

mod dist;
mod net;
mod params;

use alloc::vec;
use alloc::vec::Vec;

pub use dist::ActionDistribution;
pub use net::{backward, forward, Forward, LossWeights};
pub use params::{Dense, ParameterVector};

use crate::env::{ActionSpace, EnvSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Categorical { n: usize },
    /// Diagonal Gaussian with a state-independent log-std vector.
    Gaussian { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub obs_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub shared_trunk: bool,
    pub head: Head,
}

impl Architecture {
    /// The default `[64, 64]` shared tanh trunk with a head matching the
    /// environment's action space.
    pub fn for_env(spec: &EnvSpec) -> Architecture {
        Self::with_hidden(spec, vec![64, 64])
    }

    pub fn with_hidden(spec: &EnvSpec, hidden_sizes: Vec<usize>) -> Architecture {
        let head = match spec.action_space {
            ActionSpace::Discrete(n) => Head::Categorical { n },
            ActionSpace::Box { dim, .. } => Head::Gaussian { dim },
        };
        Architecture {
            obs_dim: spec.obs_dim,
            hidden_sizes,
            activation: Activation::Tanh,
            shared_trunk: false,
            head,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 {
            return Err(Error::Invalid("obs_dim must be positive".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::Invalid("hidden_sizes must be non-empty and positive".into()));
        }
        match self.head {
            Head::Categorical { n: 0 } | Head::Gaussian { dim: 0 } => {
                Err(Error::Invalid("empty action head".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn matches(&self, spec: &EnvSpec) -> bool {
        let head_ok = match (self.head, spec.action_space) {
            (Head::Categorical { n }, ActionSpace::Discrete(m)) => n == m,
            (Head::Gaussian { dim }, ActionSpace::Box { dim: d, .. }) => dim == d,
            _ => false,
        };
        head_ok && self.obs_dim == spec.obs_dim
    }

    pub fn head_width(&self) -> usize {
        match self.head {
            Head::Categorical { n } => n,
            Head::Gaussian { dim } => dim,
        }
    }

    pub fn log_std_dim(&self) -> usize {
        match self.head {
            Head::Categorical { .. } => 0,
            Head::Gaussian { dim } => dim,
        }
    }

    /// `(out, in)` for every dense layer, in storage order: trunk (or policy
    /// trunk), policy head, [value trunk,] value head.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let trunk = |shapes: &mut Vec<(usize, usize)>| {
            let mut inp = self.obs_dim;
            for &h in &self.hidden_sizes {
                shapes.push((h, inp));
                inp = h;
            }
            inp
        };
        let mut shapes = Vec::new();
        let top = trunk(&mut shapes);
        shapes.push((self.head_width(), top));
        let top = if self.shared_trunk { top } else { trunk(&mut shapes) };
        shapes.push((1, top));
        shapes
    }

    pub(crate) fn depth(&self) -> usize {
        self.hidden_sizes.len()
    }

    pub(crate) fn policy_head_index(&self) -> usize {
        self.depth()
    }

    pub(crate) fn value_trunk_start(&self) -> usize {
        if self.shared_trunk {
            0
        } else {
            self.depth() + 1
        }
    }

    pub(crate) fn value_head_index(&self) -> usize {
        if self.shared_trunk {
            self.depth() + 1
        } else {
            2 * self.depth() + 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvName;

    #[test]
    fn layer_layout_shared_and_split() {
        let spec = EnvSpec::of(EnvName::CartPole);
        let mut arch = Architecture::with_hidden(&spec, vec![8, 6]);
        arch.shared_trunk = true;
        assert_eq!(arch.layer_shapes(), vec![(8, 4), (6, 8), (2, 6), (1, 6)]);
        arch.shared_trunk = false;
        assert_eq!(
            arch.layer_shapes(),
            vec![(8, 4), (6, 8), (2, 6), (8, 4), (6, 8), (1, 6)]
        );
        assert_eq!(arch.value_trunk_start(), 3);
        assert_eq!(arch.value_head_index(), 5);
    }

    #[test]
    fn validation() {
        let spec = EnvSpec::of(EnvName::Pendulum);
        let arch = Architecture::with_hidden(&spec, vec![]);
        assert!(arch.validate().is_err());
        let arch = Architecture::for_env(&spec);
        assert!(arch.validate().is_ok());
        assert!(arch.matches(&spec));
        assert!(!arch.matches(&EnvSpec::of(EnvName::CartPole)));
    }
}
