//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rsurf_core::cliff::{CliffCriteria, Group, LineSearchSpec};
use rsurf_core::env::{EnvName, EnvSpec};
use rsurf_core::eval::{evaluate, ActionMode, EvalBudget, GridSpec};
use rsurf_core::nn::Architecture;
use rsurf_core::train::{Algo, TrainConfig};
use serde::Serialize;

use crate::analysis::{line_search, run_cliffs, LineSearchRequest};
use crate::checkpoint::{load_direction, Checkpoint};
use crate::experiment::{run_cliff_experiment, select_checkpoints, ExperimentRequest};
use crate::format::write_json;
use crate::run::{select_best_checkpoint, train, RunDirectory};
use crate::surface::{direction_seed, gradient_seed, run_surface, Axes, BudgetRecord, SurfaceRequest};
use crate::sweep::{seed_sweep, SeedStatus, SweepRequest};
use crate::{Error, Result, TOOLKIT_VERSION};

#[derive(Debug, Parser)]
#[command(name = "rsurf", version, about = "Reward surfaces and cliff analysis for classic-control policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy and write checkpoints.
    Train(TrainArgs),
    /// Evaluate a checkpoint, or rank all checkpoints of a run.
    Eval(EvalArgs),
    /// Reward surface along two filter-normalized random directions.
    Surface(SurfaceArgs),
    /// Reward surface along the policy gradient and one random direction.
    Heatmap(HeatmapArgs),
    /// Gradient-direction line search at every checkpoint of a run.
    Linesearch(LineSearchArgs),
    /// Classify line-search checkpoints as cliff or non-cliff.
    Cliffs(CliffArgs),
    /// Continue training from cliff and non-cliff checkpoints.
    CliffExp(CliffExpArgs),
    /// Train, select and map a surface for each of several seeds.
    SeedSweep(SweepArgs),
}

fn workers_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = workers_default())]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long, default_value = "ppo")]
    pub algo: Algo,
    #[arg(long)]
    pub total_steps: Option<u64>,
    #[arg(long)]
    pub checkpoint_interval: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Rollout length per update.
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gae_lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub minibatches: Option<usize>,
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    #[arg(long)]
    pub value_coef: Option<f64>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub hidden: Vec<usize>,
    /// Share the hidden layers between policy and value heads.
    #[arg(long)]
    pub shared_trunk: bool,
}

impl TrainFlags {
    fn resolve(&self, env: EnvName, seed: u64) -> Result<(Architecture, TrainConfig)> {
        let mut arch = Architecture::with_hidden(&EnvSpec::of(env), self.hidden.clone());
        arch.shared_trunk = self.shared_trunk;
        arch.validate()?;
        let mut c = TrainConfig::for_algo(self.algo);
        c.seed = seed;
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$( if let Some(v) = self.$flag { c.$field = v; } )*};
        }
        set!(total_steps => total_steps, checkpoint_interval => checkpoint_interval, lr => learning_rate,
             n_steps => n_steps, gamma => gamma, gae_lambda => gae_lambda, epochs => ppo_epochs,
             minibatches => minibatch_count, clip => ppo_clip, entropy_coef => entropy_coef,
             value_coef => value_coef);
        c.validate()?;
        Ok((arch, c))
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub env: EnvName,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BudgetFlags {
    /// Minimum environment steps per evaluation.
    #[arg(long, default_value_t = 1000)]
    pub min_steps: u64,
    /// Minimum episodes per evaluation.
    #[arg(long, default_value_t = 1)]
    pub min_episodes: u64,
    /// Discount applied to evaluation returns.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_eval: f64,
}

impl BudgetFlags {
    fn budget(&self, seed: u64) -> Result<EvalBudget> {
        let b = EvalBudget { min_steps: self.min_steps, min_episodes: self.min_episodes, gamma_eval: self.gamma_eval, seed };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, conflicts_with = "run", required_unless_present = "run")]
    pub checkpoint: Option<PathBuf>,
    /// Rank every checkpoint of this run over 25 episodes.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetFlags,
    /// Take the most likely action instead of sampling.
    #[arg(long)]
    pub deterministic: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GridFlags {
    /// Offsets span [-range, range] on both axes.
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    /// Lattice points per axis (odd).
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    #[command(flatten)]
    pub budget: BudgetFlags,
}

impl GridFlags {
    fn grid(&self, seed: u64) -> Result<GridSpec> {
        let g = GridSpec { range: self.range, samples_per_axis: self.samples, budget: self.budget.budget(seed)? };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub grid: GridFlags,
    /// First direction file instead of a random draw.
    #[arg(long, requires = "dir2")]
    pub dir1: Option<PathBuf>,
    /// Second direction file instead of a random draw.
    #[arg(long, requires = "dir1")]
    pub dir2: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GradientFlags {
    /// Environment steps for the policy-gradient estimate.
    #[arg(long, default_value_t = 100_000)]
    pub grad_steps: u64,
    /// Discount for the gradient estimate (defaults to the training gamma
    /// for line searches and 0.99 for heat maps).
    #[arg(long)]
    pub grad_gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub gradient: GradientFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LineSearchArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Total distance along the gradient.
    #[arg(long, default_value_t = 0.4)]
    pub distance: f64,
    #[arg(long, default_value_t = 20)]
    pub coarse: usize,
    #[arg(long, default_value_t = 10)]
    pub fine: usize,
    /// Count the origin as the first coarse sample and place the fine
    /// points between it and the next one.
    #[arg(long)]
    pub origin_counts: bool,
    /// Only these checkpoint steps.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<u64>>,
    #[command(flatten)]
    pub budget: BudgetFlags,
    #[command(flatten)]
    pub gradient: GradientFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CliffArgs {
    /// A linesearch.csv file.
    #[arg(long)]
    pub linesearch: PathBuf,
    /// Minimum relative drop.
    #[arg(long = "drop", default_value_t = 0.5)]
    pub drop_fraction: f64,
    /// Minimum drop as a share of the global reward range.
    #[arg(long = "range-frac", default_value_t = 0.25)]
    pub range_fraction: f64,
    /// Largest offset considered.
    #[arg(long, default_value_t = 0.04)]
    pub window: f64,
    /// Report path; cliffs.json next to the line search if unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CliffExpArgs {
    /// cliffs.json reports to draw checkpoints from.
    #[arg(long = "select")]
    pub select: Vec<PathBuf>,
    /// Checkpoints per group drawn from the reports.
    #[arg(long, default_value_t = 12)]
    pub count: usize,
    /// Explicit cliff checkpoint files.
    #[arg(long = "cliff")]
    pub cliff: Vec<PathBuf>,
    /// Explicit non-cliff checkpoint files.
    #[arg(long = "non-cliff")]
    pub non_cliff: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "a2c,ppo")]
    pub algos: Vec<Algo>,
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-2")]
    pub lrs: Vec<f64>,
    #[arg(long, default_value_t = 2048)]
    pub n_steps: u64,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 100)]
    pub eval_episodes: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub env: EnvName,
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub train: TrainFlags,
    #[command(flatten)]
    pub grid: GridFlags,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = workers_default())]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EvalManifest {
    toolkit_version: String,
    checkpoint: String,
    env: String,
    train_step: u64,
    budget: BudgetRecord,
    deterministic: bool,
    mean: f64,
    std: f64,
    stderr: f64,
    episodes: u64,
    steps: u64,
}

#[derive(Serialize)]
struct RankManifest {
    toolkit_version: String,
    run: String,
    eval_seed: u64,
    episodes_per_checkpoint: u64,
    best_step: u64,
    best_checkpoint: String,
    scores: Vec<crate::sweep::ScoreRecord>,
}

fn check_workers(workers: usize) -> Result<()> {
    if workers == 0 {
        return Err(Error::Usage("--workers must be at least 1".into()));
    }
    Ok(())
}

fn usage_if_missing(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")));
    }
    Ok(())
}

/// Runs one parsed command, writing progress lines to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let say = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    match cli.command {
        Command::Train(a) => {
            check_workers(a.common.workers)?;
            let (arch, config) = a.train.resolve(a.env, a.common.seed)?;
            let run = train(a.env, arch, config, &a.common.out)?;
            say(out, format!("trained {} checkpoints into {}", run.checkpoint_steps.len(), run.root.display()));
        }
        Command::Eval(a) => {
            check_workers(a.common.workers)?;
            if let Some(run_dir) = &a.run {
                usage_if_missing(run_dir)?;
                let run = RunDirectory::open(run_dir)?;
                let best = select_best_checkpoint(&run, a.common.seed, a.common.workers)?;
                write_json(
                    &a.common.out.join("best.json"),
                    &RankManifest {
                        toolkit_version: TOOLKIT_VERSION.into(),
                        run: run_dir.display().to_string(),
                        eval_seed: a.common.seed,
                        episodes_per_checkpoint: crate::run::SELECTION_EPISODES,
                        best_step: best.step,
                        best_checkpoint: best.path.display().to_string(),
                        scores: best
                            .scores
                            .iter()
                            .map(|s| crate::sweep::ScoreRecord { step: s.step, mean: s.stat.mean, stderr: s.stat.stderr })
                            .collect(),
                    },
                )?;
                say(out, format!("best checkpoint step {} mean {:.3}", best.step, best.stat.mean));
            } else {
                let path = a.checkpoint.expect("clap enforces checkpoint or run");
                let ckpt = Checkpoint::load(&path)?;
                let budget = a.budget.budget(a.common.seed)?;
                let mode = if a.deterministic { ActionMode::Deterministic } else { ActionMode::Stochastic };
                let s = evaluate(&ckpt.params, &ckpt.architecture, ckpt.env_spec(), &budget, mode)?;
                write_json(
                    &a.common.out.join("eval.json"),
                    &EvalManifest {
                        toolkit_version: TOOLKIT_VERSION.into(),
                        checkpoint: path.display().to_string(),
                        env: ckpt.env.as_str().into(),
                        train_step: ckpt.train_step,
                        budget: (&budget).into(),
                        deterministic: a.deterministic,
                        mean: s.mean,
                        std: s.std,
                        stderr: s.stderr,
                        episodes: s.episodes,
                        steps: s.steps,
                    },
                )?;
                say(out, format!("mean {:.3} stderr {:.3} over {} episodes", s.mean, s.stderr, s.episodes));
            }
        }
        Command::Surface(a) => {
            check_workers(a.common.workers)?;
            let grid = a.grid.grid(a.common.seed)?;
            let axes = match (&a.dir1, &a.dir2) {
                (Some(p1), Some(p2)) => {
                    let arch = Checkpoint::load(&a.checkpoint)?.architecture;
                    Axes::Files(load_direction(p1, &arch)?, load_direction(p2, &arch)?)
                }
                _ => Axes::Random { seed1: direction_seed(a.common.seed, 0), seed2: direction_seed(a.common.seed, 1) },
            };
            let s = run_surface(&SurfaceRequest { checkpoint: a.checkpoint, axes, grid, workers: a.common.workers, out: a.common.out })?;
            say(out, format!("surface centre {:.3} max {:.3}", s.manifest.center_mean, s.manifest.max_mean));
        }
        Command::Heatmap(a) => {
            check_workers(a.common.workers)?;
            let grid = a.grid.grid(a.common.seed)?;
            let axes = Axes::Gradient {
                env_steps: a.gradient.grad_steps,
                gamma: a.gradient.grad_gamma.unwrap_or(0.99),
                gradient_seed: gradient_seed(a.common.seed),
                random_seed: direction_seed(a.common.seed, 1),
            };
            let s = run_surface(&SurfaceRequest { checkpoint: a.checkpoint, axes, grid, workers: a.common.workers, out: a.common.out })?;
            say(out, format!("heatmap centre {:.3} max {:.3}", s.manifest.center_mean, s.manifest.max_mean));
        }
        Command::Linesearch(a) => {
            check_workers(a.common.workers)?;
            usage_if_missing(&a.run)?;
            let spec = LineSearchSpec {
                distance: a.distance,
                coarse_points: a.coarse,
                fine_points: a.fine,
                origin_counts: a.origin_counts,
                budget: a.budget.budget(a.common.seed)?,
            };
            let (result, _) = line_search(&LineSearchRequest {
                run: a.run,
                spec,
                grad_steps: a.gradient.grad_steps,
                gamma: a.gradient.grad_gamma,
                seed: a.common.seed,
                steps: a.steps,
                workers: a.common.workers,
                out: a.common.out,
            })?;
            say(out, format!("line search over {} checkpoints", result.len()));
        }
        Command::Cliffs(a) => {
            let criteria = CliffCriteria { drop_fraction: a.drop_fraction, range_fraction: a.range_fraction, window: a.window };
            let target = a.out.unwrap_or_else(|| a.linesearch.with_file_name("cliffs.json"));
            let (report, _) = run_cliffs(&a.linesearch, criteria, &target)?;
            say(out, format!("{} cliff, {} non-cliff checkpoints", report.cliff_steps().len(), report.non_cliff_steps().len()));
        }
        Command::CliffExp(a) => {
            check_workers(a.common.workers)?;
            let mut checkpoints = select_checkpoints(&a.select, a.count, a.common.seed)?;
            checkpoints.extend(a.cliff.iter().map(|p| (Group::Cliff, p.clone())));
            checkpoints.extend(a.non_cliff.iter().map(|p| (Group::NonCliff, p.clone())));
            checkpoints.sort_by_key(|(g, _)| *g);
            let result = run_cliff_experiment(&ExperimentRequest {
                checkpoints,
                algos: a.algos,
                learning_rates: a.lrs,
                n_steps: a.n_steps,
                trials: a.trials,
                eval_episodes: a.eval_episodes,
                seed: a.common.seed,
                workers: a.common.workers,
                out: a.common.out,
            })?;
            for r in &result.rows {
                say(out, format!("{} lr={} {} {:+.3}% (n={})", r.algo, r.learning_rate, r.group, r.mean_percent_change, r.trials));
            }
        }
        Command::SeedSweep(a) => {
            check_workers(a.workers)?;
            let (architecture, config) = a.train.resolve(a.env, 0)?;
            let results = seed_sweep(&SweepRequest {
                env: a.env,
                architecture,
                config,
                seeds: a.seeds,
                grid: a.grid.grid(0)?,
                workers: a.workers,
                out: a.out,
            })?;
            for (r, status) in results {
                let tag = if status == SeedStatus::Reused { "reused" } else { "computed" };
                say(out, format!("{} {tag} best step {} centre {:.3}", r.dir, r.best_step, r.center_mean));
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
/// Failures print a single `rsurf: error[<kind>]: <message>` line to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.kind().as_str().unwrap_or("invalid arguments");
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(msg).trim_start_matches("error: ");
            let _ = writeln!(err, "rsurf: error[usage]: {first}");
            return 2;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let text = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "rsurf: error[{}]: {text}", e.kind());
            e.exit_code()
        }
    }
}
