//! Seed sweeps: train, select the best checkpoint and evaluate a random
//! surface for every seed.
//!
//! ```text
//! <out>/sweep.json
//! <out>/run_<k>_seed_<s>/run/...       training run
//! <out>/run_<k>_seed_<s>/best.json     selection scores
//! <out>/run_<k>_seed_<s>/surface/...   surface of the best checkpoint
//! <out>/run_<k>_seed_<s>/done.json     completion marker
//! ```
//!
//! A seed directory with a completion marker is reused as is; one without is
//! rebuilt from scratch.

use std::fs;
use std::path::PathBuf;

use rsurf_core::env::EnvName;
use rsurf_core::eval::GridSpec;
use rsurf_core::nn::Architecture;
use rsurf_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::format::{read_json, write_json};
use crate::run::{select_best_checkpoint, train};
use crate::surface::{direction_seed, run_surface, Axes, BudgetRecord, SurfaceRequest};
use crate::{Error, Result, TOOLKIT_VERSION};

#[derive(Debug, Clone)]
pub struct SweepRequest {
    pub env: EnvName,
    pub architecture: Architecture,
    /// Template; `seed` is replaced per entry.
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    /// Template; the budget seed is replaced per entry.
    pub grid: GridSpec,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub step: u64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub index: usize,
    pub seed: u64,
    pub dir: String,
    pub best_step: u64,
    pub best_mean: f64,
    pub center_mean: f64,
    pub max_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BestRecord {
    best_step: u64,
    scores: Vec<ScoreRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub toolkit_version: String,
    pub env: String,
    pub seeds: Vec<u64>,
    pub range: f64,
    pub samples_per_axis: usize,
    pub budget: BudgetRecord,
    pub workers: usize,
    pub entries: Vec<SeedResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStatus {
    Computed,
    Reused,
}

pub fn seed_dir_name(index: usize, seed: u64) -> String {
    format!("run_{index}_seed_{seed}")
}

fn run_seed(req: &SweepRequest, index: usize, seed: u64) -> Result<(SeedResult, SeedStatus)> {
    let name = seed_dir_name(index, seed);
    let dir = req.out.join(&name);
    let marker = dir.join("done.json");
    if marker.exists() {
        return Ok((read_json(&marker)?, SeedStatus::Reused));
    }
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut config = req.config.clone();
    config.seed = seed;
    let run = train(req.env, req.architecture.clone(), config, &dir.join("run"))?;
    let best = select_best_checkpoint(&run, seed, req.workers)?;
    write_json(
        &dir.join("best.json"),
        &BestRecord {
            best_step: best.step,
            scores: best
                .scores
                .iter()
                .map(|s| ScoreRecord { step: s.step, mean: s.stat.mean, stderr: s.stat.stderr })
                .collect(),
        },
    )?;
    let mut grid = req.grid;
    grid.budget.seed = seed;
    let surface = run_surface(&SurfaceRequest {
        checkpoint: best.path.clone(),
        axes: Axes::Random { seed1: direction_seed(seed, 0), seed2: direction_seed(seed, 1) },
        grid,
        workers: req.workers,
        out: dir.join("surface"),
    })?;
    let result = SeedResult {
        index,
        seed,
        dir: name,
        best_step: best.step,
        best_mean: best.stat.mean,
        center_mean: surface.manifest.center_mean,
        max_mean: surface.manifest.max_mean,
    };
    write_json(&marker, &result)?;
    Ok((result, SeedStatus::Computed))
}

/// Runs every seed in order, skipping completed ones, and writes the index.
pub fn seed_sweep(req: &SweepRequest) -> Result<Vec<(SeedResult, SeedStatus)>> {
    req.config.validate()?;
    req.grid.validate()?;
    if req.seeds.is_empty() {
        return Err(Error::Usage("seed sweep needs at least one seed".into()));
    }
    let results = req
        .seeds
        .iter()
        .enumerate()
        .map(|(k, &s)| run_seed(req, k, s))
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &req.out.join("sweep.json"),
        &SweepManifest {
            toolkit_version: TOOLKIT_VERSION.into(),
            env: req.env.as_str().into(),
            seeds: req.seeds.clone(),
            range: req.grid.range,
            samples_per_axis: req.grid.samples_per_axis,
            budget: (&req.grid.budget).into(),
            workers: req.workers,
            entries: results.iter().map(|(r, _)| r.clone()).collect(),
        },
    )?;
    Ok(results)
}
