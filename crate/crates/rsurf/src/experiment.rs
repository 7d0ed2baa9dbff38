//! The cliff experiment: continue training from cliff and non-cliff
//! checkpoints and compare the change in return.
//!
//! ```text
//! <out>/experiment.csv         algo, lr, n_steps, group, mean_percent_change, trials
//! <out>/experiment_trials.csv  one row per (checkpoint, trial, algo, lr)
//! <out>/experiment.json        manifest
//! ```

use std::path::{Path, PathBuf};

use rsurf_core::cliff::{aggregate, experiment_config, percent_change, ExperimentRow, Group, TrialRecord};
use rsurf_core::env::make_env;
use rsurf_core::eval::{evaluate, ActionMode, EvalBudget};
use rsurf_core::rng::{derive_seed, Rng};
use rsurf_core::train::{Algo, TrainConfig, Trainer};
use serde::{Deserialize, Serialize};

use crate::analysis::CliffsFile;
use crate::checkpoint::Checkpoint;
use crate::format::{self, write_json, write_text, VersionedCsv};
use crate::pool::parallel_map;
use crate::run::RunDirectory;
use crate::{Error, Result, TOOLKIT_VERSION};

pub const EXPERIMENT_CSV: VersionedCsv = VersionedCsv {
    schema: "experiment",
    version: 1,
    columns: &["algo", "lr", "n_steps", "group", "mean_percent_change", "trials"],
};

pub const TRIALS_CSV: VersionedCsv = VersionedCsv {
    schema: "experiment-trials",
    version: 1,
    columns: &[
        "algo", "lr", "n_steps", "group", "checkpoint", "trial", "before_mean", "after_mean", "percent_change",
    ],
};

pub fn parse_group(s: &str) -> Option<Group> {
    match s {
        "cliff" => Some(Group::Cliff),
        "non_cliff" => Some(Group::NonCliff),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCheckpoint {
    pub group: String,
    pub path: PathBuf,
}

/// Picks up to `count` cliff and `count` non-cliff checkpoints from the
/// pooled reports. The choice within each group is a seeded shuffle; the
/// result lists cliffs first, each group in report order.
pub fn select_checkpoints(reports: &[PathBuf], count: usize, seed: u64) -> Result<Vec<(Group, PathBuf)>> {
    let mut pools: [Vec<PathBuf>; 2] = [Vec::new(), Vec::new()];
    for path in reports {
        let file = CliffsFile::load(path)?;
        let run = file
            .run
            .as_deref()
            .map(PathBuf::from)
            .ok_or_else(|| Error::format(path, "report does not name its run directory"))?;
        for s in &file.cliff_steps {
            pools[0].push(RunDirectory::checkpoint_path(&run, *s));
        }
        for s in &file.non_cliff_steps {
            pools[1].push(RunDirectory::checkpoint_path(&run, *s));
        }
    }
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();
    for (group, pool) in [Group::Cliff, Group::NonCliff].into_iter().zip(pools) {
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        rng.shuffle(&mut idx);
        idx.truncate(count);
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| (group, pool[i].clone())));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ExperimentRequest {
    pub checkpoints: Vec<(Group, PathBuf)>,
    pub algos: Vec<Algo>,
    pub learning_rates: Vec<f64>,
    pub n_steps: u64,
    pub trials: usize,
    pub eval_episodes: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl ExperimentRequest {
    pub fn validate(&self) -> Result<()> {
        if self.checkpoints.is_empty() || self.algos.is_empty() || self.learning_rates.is_empty() {
            return Err(Error::Usage("experiment needs checkpoints, algorithms and learning rates".into()));
        }
        if self.trials == 0 || self.eval_episodes == 0 || self.n_steps == 0 {
            return Err(Error::Usage("trials, eval episodes and n_steps must be positive".into()));
        }
        if self.learning_rates.iter().any(|lr| !lr.is_finite() || *lr < 0.0) {
            return Err(Error::Usage("learning rates must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub algo: String,
    pub lr: f64,
    pub n_steps: u64,
    pub group: String,
    pub mean_percent_change: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub toolkit_version: String,
    pub checkpoints: Vec<ExperimentCheckpoint>,
    pub algos: Vec<String>,
    pub learning_rates: Vec<f64>,
    pub n_steps: u64,
    pub trials: usize,
    pub eval_episodes: u64,
    pub seed: u64,
    pub workers: usize,
    pub rows: Vec<RowRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<ExperimentRow>,
}

/// Trial `t` of checkpoint `c` evaluates once before training and once after
/// each (algo, lr) phase, all with the same evaluation seed; every phase
/// starts from the checkpoint with the same training seed.
pub fn run_cliff_experiment(req: &ExperimentRequest) -> Result<ExperimentOutput> {
    req.validate()?;
    let ckpts = req.checkpoints.iter().map(|(_, p)| Checkpoint::load(p)).collect::<Result<Vec<_>>>()?;
    let mut within_group = Vec::with_capacity(ckpts.len());
    for (k, (group, _)) in req.checkpoints.iter().enumerate() {
        within_group.push(req.checkpoints[..k].iter().filter(|(g, _)| g == group).count());
    }
    let phases: Vec<(Algo, f64)> =
        req.algos.iter().flat_map(|&a| req.learning_rates.iter().map(move |&lr| (a, lr))).collect();

    let units = ckpts.len() * req.trials;
    let per_unit = parallel_map(req.workers, units, |u| -> Result<Vec<TrialRecord>> {
        let (c, t) = (u / req.trials, u % req.trials);
        let ckpt = &ckpts[c];
        let spec = ckpt.env_spec();
        let unit_seed = derive_seed(derive_seed(req.seed, c as u64), t as u64);
        let budget = EvalBudget::episodes(req.eval_episodes, derive_seed(unit_seed, 0));
        let before = evaluate(&ckpt.params, &ckpt.architecture, spec, &budget, ActionMode::Stochastic)?;
        let mut records = Vec::with_capacity(phases.len());
        for &(algo, lr) in &phases {
            let mut config: TrainConfig = experiment_config(&TrainConfig::for_algo(algo), algo, lr, req.n_steps);
            config.seed = derive_seed(unit_seed, 1);
            let mut trainer = Trainer::from_params(
                make_env(spec, derive_seed(config.seed, 3)),
                ckpt.architecture.clone(),
                ckpt.params.clone(),
                config,
            )?;
            trainer.train_steps(req.n_steps)?;
            let after = evaluate(trainer.params(), &ckpt.architecture, spec, &budget, ActionMode::Stochastic)?;
            records.push(TrialRecord {
                algo,
                learning_rate: lr,
                n_steps: req.n_steps,
                group: req.checkpoints[c].0,
                checkpoint: within_group[c],
                trial: t,
                before,
                after,
                percent_change: percent_change(before.mean, after.mean),
            });
        }
        Ok(records)
    })?;
    let records: Vec<TrialRecord> = per_unit.into_iter().flatten().collect();
    let rows = aggregate(&records);
    write_outputs(req, &records, &rows)?;
    Ok(ExperimentOutput { records, rows })
}

fn write_outputs(req: &ExperimentRequest, records: &[TrialRecord], rows: &[ExperimentRow]) -> Result<()> {
    let out: &Path = &req.out;
    write_text(
        &out.join("experiment.csv"),
        &EXPERIMENT_CSV.render(rows.iter().map(|r| {
            vec![
                r.algo.as_str().into(),
                format::float(r.learning_rate),
                r.n_steps.to_string(),
                r.group.as_str().into(),
                format::float(r.mean_percent_change),
                r.trials.to_string(),
            ]
        })),
    )?;
    write_text(
        &out.join("experiment_trials.csv"),
        &TRIALS_CSV.render(records.iter().map(|r| {
            vec![
                r.algo.as_str().into(),
                format::float(r.learning_rate),
                r.n_steps.to_string(),
                r.group.as_str().into(),
                r.checkpoint.to_string(),
                r.trial.to_string(),
                format::float(r.before.mean),
                format::float(r.after.mean),
                format::float(r.percent_change),
            ]
        })),
    )?;
    write_json(
        &out.join("experiment.json"),
        &ExperimentManifest {
            toolkit_version: TOOLKIT_VERSION.into(),
            checkpoints: req
                .checkpoints
                .iter()
                .map(|(g, p)| ExperimentCheckpoint { group: g.as_str().into(), path: p.clone() })
                .collect(),
            algos: req.algos.iter().map(|a| a.as_str().into()).collect(),
            learning_rates: req.learning_rates.clone(),
            n_steps: req.n_steps,
            trials: req.trials,
            eval_episodes: req.eval_episodes,
            seed: req.seed,
            workers: req.workers,
            rows: rows
                .iter()
                .map(|r| RowRecord {
                    algo: r.algo.as_str().into(),
                    lr: r.learning_rate,
                    n_steps: r.n_steps,
                    group: r.group.as_str().into(),
                    mean_percent_change: r.mean_percent_change,
                    stderr: r.stderr,
                    trials: r.trials,
                })
                .collect(),
        },
    )
}
