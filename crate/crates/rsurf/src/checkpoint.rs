//! Checkpoint and direction files.
//!
//! Both store parameters as a list of blocks (weights and bias of every
//! layer in network order, then the log-std vector when present), each a
//! shape plus base64 little-endian f64 data.

use std::path::Path;

use rsurf_core::direction::{Direction, DirectionKind, Provenance};
use rsurf_core::env::{EnvName, EnvSpec};
use rsurf_core::nn::{Activation, Architecture, Head, ParameterVector};
use rsurf_core::train::{Algo, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::format::{decode_f64s, encode_f64s, read_json, write_json, BlockRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadRecord {
    Categorical { n: usize },
    Gaussian { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureRecord {
    pub obs_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub activation: String,
    pub shared_trunk: bool,
    pub head: HeadRecord,
}

impl From<&Architecture> for ArchitectureRecord {
    fn from(a: &Architecture) -> Self {
        ArchitectureRecord {
            obs_dim: a.obs_dim,
            hidden_sizes: a.hidden_sizes.clone(),
            activation: match a.activation {
                Activation::Tanh => "tanh".into(),
            },
            shared_trunk: a.shared_trunk,
            head: match a.head {
                Head::Categorical { n } => HeadRecord::Categorical { n },
                Head::Gaussian { dim } => HeadRecord::Gaussian { dim },
            },
        }
    }
}

impl ArchitectureRecord {
    pub fn to_architecture(&self, path: &Path) -> Result<Architecture> {
        let activation = match self.activation.as_str() {
            "tanh" => Activation::Tanh,
            other => return Err(Error::format(path, format!("unknown activation `{other}`"))),
        };
        let arch = Architecture {
            obs_dim: self.obs_dim,
            hidden_sizes: self.hidden_sizes.clone(),
            activation,
            shared_trunk: self.shared_trunk,
            head: match self.head {
                HeadRecord::Categorical { n } => Head::Categorical { n },
                HeadRecord::Gaussian { dim } => Head::Gaussian { dim },
            },
        };
        arch.validate()?;
        Ok(arch)
    }
}

pub fn encode_blocks(params: &ParameterVector) -> Vec<BlockRecord> {
    params
        .block_shapes()
        .into_iter()
        .zip(params.blocks())
        .map(|(shape, data)| BlockRecord { shape, data: encode_f64s(data) })
        .collect()
}

pub fn decode_blocks(path: &Path, arch: &Architecture, blocks: &[BlockRecord]) -> Result<ParameterVector> {
    let decoded = blocks
        .iter()
        .map(|b| {
            decode_f64s(&b.data)
                .map(|data| (b.shape.clone(), data))
                .map_err(|m| Error::format(path, m))
        })
        .collect::<Result<Vec<_>>>()?;
    ParameterVector::from_blocks(arch, &decoded).map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointRecord {
    env: String,
    algo: String,
    train_step: u64,
    seed: u64,
    architecture: ArchitectureRecord,
    blocks: Vec<BlockRecord>,
}

/// A policy snapshot with enough metadata to evaluate or resume it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub env: EnvName,
    pub algo: Algo,
    pub train_step: u64,
    pub seed: u64,
    pub architecture: Architecture,
    pub params: ParameterVector,
}

impl Checkpoint {
    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec::of(self.env)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(
            path,
            &CheckpointRecord {
                env: self.env.as_str().into(),
                algo: self.algo.as_str().into(),
                train_step: self.train_step,
                seed: self.seed,
                architecture: (&self.architecture).into(),
                blocks: encode_blocks(&self.params),
            },
        )
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let rec: CheckpointRecord = read_json(path)?;
        let env: EnvName = rec.env.parse().map_err(|_| Error::format(path, format!("unknown env `{}`", rec.env)))?;
        let algo: Algo = rec.algo.parse().map_err(|_| Error::format(path, format!("unknown algo `{}`", rec.algo)))?;
        let architecture = rec.architecture.to_architecture(path)?;
        if !architecture.matches(&EnvSpec::of(env)) {
            return Err(Error::format(path, "architecture does not match environment"));
        }
        let params = decode_blocks(path, &architecture, &rec.blocks)?;
        Ok(Checkpoint { env, algo, train_step: rec.train_step, seed: rec.seed, architecture, params })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceRecord {
    Seed(u64),
    PolicyGradient { seed: u64, env_steps: u64, gamma: f64 },
    External,
}

impl From<&Provenance> for ProvenanceRecord {
    fn from(p: &Provenance) -> Self {
        match *p {
            Provenance::Seed(s) => ProvenanceRecord::Seed(s),
            Provenance::PolicyGradient { seed, env_steps, gamma } => {
                ProvenanceRecord::PolicyGradient { seed, env_steps, gamma }
            }
            Provenance::External => ProvenanceRecord::External,
        }
    }
}

impl From<&ProvenanceRecord> for Provenance {
    fn from(p: &ProvenanceRecord) -> Self {
        match *p {
            ProvenanceRecord::Seed(s) => Provenance::Seed(s),
            ProvenanceRecord::PolicyGradient { seed, env_steps, gamma } => {
                Provenance::PolicyGradient { seed, env_steps, gamma }
            }
            ProvenanceRecord::External => Provenance::External,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DirectionRecord {
    kind: String,
    seed_or_source: ProvenanceRecord,
    blocks: Vec<BlockRecord>,
}

pub fn save_direction(path: &Path, direction: &Direction) -> Result<()> {
    write_json(
        path,
        &DirectionRecord {
            kind: direction.kind.as_str().into(),
            seed_or_source: (&direction.provenance).into(),
            blocks: encode_blocks(&direction.params),
        },
    )
}

/// Loads a direction; its blocks must fit `arch`.
pub fn load_direction(path: &Path, arch: &Architecture) -> Result<Direction> {
    let rec: DirectionRecord = read_json(path)?;
    let kind = DirectionKind::parse(&rec.kind)
        .ok_or_else(|| Error::format(path, format!("unknown direction kind `{}`", rec.kind)))?;
    Ok(Direction {
        params: decode_blocks(path, arch, &rec.blocks)?,
        kind,
        provenance: (&rec.seed_or_source).into(),
    })
}

/// Training hyperparameters as recorded in `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigRecord {
    pub algo: String,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
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

impl From<&TrainConfig> for TrainConfigRecord {
    fn from(c: &TrainConfig) -> Self {
        TrainConfigRecord {
            algo: c.algo.as_str().into(),
            gamma: c.gamma,
            gae_lambda: c.gae_lambda,
            learning_rate: c.learning_rate,
            n_steps: c.n_steps,
            ppo_epochs: c.ppo_epochs,
            ppo_clip: c.ppo_clip,
            minibatch_count: c.minibatch_count,
            value_coef: c.value_coef,
            entropy_coef: c.entropy_coef,
            total_steps: c.total_steps,
            checkpoint_interval: c.checkpoint_interval,
            seed: c.seed,
            max_grad_norm: c.max_grad_norm,
            normalize_advantages: c.normalize_advantages,
        }
    }
}

impl TrainConfigRecord {
    pub fn to_config(&self, path: &Path) -> Result<TrainConfig> {
        let algo: Algo = self
            .algo
            .parse()
            .map_err(|_| Error::format(path, format!("unknown algo `{}`", self.algo)))?;
        Ok(TrainConfig {
            algo,
            gamma: self.gamma,
            gae_lambda: self.gae_lambda,
            learning_rate: self.learning_rate,
            n_steps: self.n_steps,
            ppo_epochs: self.ppo_epochs,
            ppo_clip: self.ppo_clip,
            minibatch_count: self.minibatch_count,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
            total_steps: self.total_steps,
            checkpoint_interval: self.checkpoint_interval,
            seed: self.seed,
            max_grad_norm: self.max_grad_norm,
            normalize_advantages: self.normalize_advantages,
        })
    }
}
