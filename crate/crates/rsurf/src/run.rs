//! Training run directories.
//!
//! ```text
//! <run>/run.json                 resolved configuration and checkpoint list
//! <run>/log.csv                  step, mean_return, episodes
//! <run>/checkpoints/step_<N>.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rsurf_core::env::{make_env, EnvName, EnvSpec};
use rsurf_core::eval::{evaluate, ActionMode, EvalBudget, EvalStatistic};
use rsurf_core::nn::Architecture;
use rsurf_core::rng::derive_seed;
use rsurf_core::train::{TrainConfig, Trainer};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{ArchitectureRecord, Checkpoint, TrainConfigRecord};
use crate::format::{self, read_json, write_json, write_text, VersionedCsv};
use crate::pool::parallel_map;
use crate::{Error, Result, TOOLKIT_VERSION};

pub const LOG_CSV: VersionedCsv = VersionedCsv {
    schema: "train-log",
    version: 1,
    columns: &["step", "mean_return", "episodes"],
};

/// Episodes per checkpoint when ranking checkpoints.
pub const SELECTION_EPISODES: u64 = 25;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub env: String,
    pub architecture: ArchitectureRecord,
    pub config: TrainConfigRecord,
    pub checkpoint_steps: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct RunDirectory {
    pub root: PathBuf,
    pub env: EnvName,
    pub architecture: Architecture,
    pub config: TrainConfig,
    pub checkpoint_steps: Vec<u64>,
}

impl RunDirectory {
    pub fn checkpoint_path(root: &Path, step: u64) -> PathBuf {
        root.join("checkpoints").join(format!("step_{step}.json"))
    }

    pub fn open(root: &Path) -> Result<RunDirectory> {
        let path = root.join("run.json");
        let m: RunManifest = read_json(&path)?;
        let env: EnvName = m.env.parse().map_err(|_| Error::format(&path, format!("unknown env `{}`", m.env)))?;
        let mut checkpoint_steps = m.checkpoint_steps.clone();
        checkpoint_steps.sort_unstable();
        Ok(RunDirectory {
            root: root.to_path_buf(),
            env,
            architecture: m.architecture.to_architecture(&path)?,
            config: m.config.to_config(&path)?,
            checkpoint_steps,
        })
    }

    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec::of(self.env)
    }

    pub fn load_checkpoint(&self, step: u64) -> Result<Checkpoint> {
        let ckpt = Checkpoint::load(&Self::checkpoint_path(&self.root, step))?;
        if ckpt.architecture != self.architecture || ckpt.env != self.env {
            return Err(Error::format(
                Self::checkpoint_path(&self.root, step),
                "checkpoint does not belong to this run",
            ));
        }
        Ok(ckpt)
    }
}

fn write_manifest(root: &Path, env: EnvName, arch: &Architecture, config: &TrainConfig, steps: &[u64]) -> Result<()> {
    write_json(
        &root.join("run.json"),
        &RunManifest {
            toolkit_version: TOOLKIT_VERSION.into(),
            env: env.as_str().into(),
            architecture: arch.into(),
            config: config.into(),
            checkpoint_steps: steps.to_vec(),
        },
    )
}

/// Trains from scratch into `out`, writing a checkpoint at step 0, after
/// every `checkpoint_interval` steps and at the end.
pub fn train(env: EnvName, arch: Architecture, config: TrainConfig, out: &Path) -> Result<RunDirectory> {
    let spec = EnvSpec::of(env);
    if !arch.matches(&spec) {
        return Err(Error::Usage(format!("architecture does not fit {}", env.as_str())));
    }
    fs::create_dir_all(out.join("checkpoints")).map_err(|e| Error::io(out, e))?;
    write_manifest(out, env, &arch, &config, &[])?;
    let mut trainer = Trainer::new(make_env(spec, derive_seed(config.seed, 3)), arch.clone(), config.clone())?;
    let mut steps = Vec::new();
    let mut log = Vec::new();
    trainer.run(|event| -> Result<()> {
        Checkpoint {
            env,
            algo: config.algo,
            train_step: event.step,
            seed: config.seed,
            architecture: arch.clone(),
            params: event.params.clone(),
        }
        .save(&RunDirectory::checkpoint_path(out, event.step))?;
        steps.push(event.step);
        log.push(vec![
            event.step.to_string(),
            format::float(event.mean_return.unwrap_or(f64::NAN)),
            event.episodes.to_string(),
        ]);
        Ok(())
    })?;
    write_text(&out.join("log.csv"), &LOG_CSV.render(log))?;
    write_manifest(out, env, &arch, &config, &steps)?;
    RunDirectory::open(out)
}

#[derive(Debug, Clone)]
pub struct CheckpointScore {
    pub step: u64,
    pub stat: EvalStatistic,
}

#[derive(Debug, Clone)]
pub struct BestCheckpoint {
    pub step: u64,
    pub path: PathBuf,
    pub stat: EvalStatistic,
    pub scores: Vec<CheckpointScore>,
}

/// Index of the highest mean; ties go to the later checkpoint.
pub fn best_index(scores: &[CheckpointScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        match best {
            Some(b) if s.stat.mean < scores[b].stat.mean => {}
            Some(b) if s.stat.mean == scores[b].stat.mean && s.step < scores[b].step => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Scores every checkpoint over [`SELECTION_EPISODES`] stochastic episodes
/// (same evaluation seed for all) and returns the best one.
pub fn select_best_checkpoint(run: &RunDirectory, eval_seed: u64, workers: usize) -> Result<BestCheckpoint> {
    if run.checkpoint_steps.is_empty() {
        return Err(rsurf_core::Error::EmptyRun.into());
    }
    let budget = EvalBudget::episodes(SELECTION_EPISODES, eval_seed);
    let scores = parallel_map(workers, run.checkpoint_steps.len(), |k| -> Result<CheckpointScore> {
        let step = run.checkpoint_steps[k];
        let ckpt = run.load_checkpoint(step)?;
        let stat = evaluate(&ckpt.params, &ckpt.architecture, run.env_spec(), &budget, ActionMode::Stochastic)?;
        Ok(CheckpointScore { step, stat })
    })?;
    let b = best_index(&scores).expect("non-empty");
    Ok(BestCheckpoint {
        step: scores[b].step,
        path: RunDirectory::checkpoint_path(&run.root, scores[b].step),
        stat: scores[b].stat,
        scores,
    })
}
