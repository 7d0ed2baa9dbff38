//! Gradient line-search layout, cliff classification and the bookkeeping
//! of the cliff-vs-non-cliff training experiment.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::direction::{perturb, Direction};
use crate::env::{make_env, EnvSpec};
use crate::eval::{evaluate, ActionMode, EvalBudget, EvalStatistic};
use crate::nn::{Architecture, ParameterVector};
use crate::rng::derive_seed;
use crate::train::{Algo, TrainConfig, Trainer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Segment {
    Origin,
    Fine,
    Coarse,
}

impl Segment {
    pub fn as_str(self) -> &'static str {
        match self {
            Segment::Origin => "origin",
            Segment::Fine => "fine",
            Segment::Coarse => "coarse",
        }
    }

    pub fn parse(s: &str) -> Option<Segment> {
        match s {
            "origin" => Some(Segment::Origin),
            "fine" => Some(Segment::Fine),
            "coarse" => Some(Segment::Coarse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchSpec {
    pub distance: f64,
    pub coarse_points: usize,
    pub fine_points: usize,
    /// Alternative layout reading: the origin is the first of the
    /// `coarse_points` samples and the fine points fill the gap between the
    /// origin and the next coarse sample.
    pub origin_counts: bool,
    pub budget: EvalBudget,
}

impl LineSearchSpec {
    pub fn new(budget: EvalBudget) -> LineSearchSpec {
        LineSearchSpec { distance: 0.4, coarse_points: 20, fine_points: 10, origin_counts: false, budget }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::Invalid("line-search distance must be positive".into()));
        }
        if self.coarse_points < 2 {
            return Err(Error::Invalid("need at least two coarse points".into()));
        }
        self.budget.validate()
    }

    /// Sample offsets in increasing order: the origin, `coarse_points`
    /// evenly spaced up to `distance`, and `fine_points` evenly spaced
    /// strictly between the first two coarse offsets.
    ///
    /// With `origin_counts`, the origin is the first of `coarse_points`
    /// samples spaced `distance / (coarse_points - 1)` apart and the fine
    /// points lie strictly between the origin and the next coarse offset.
    pub fn offsets(&self) -> Vec<(f64, Segment)> {
        let intervals = if self.origin_counts { self.coarse_points - 1 } else { self.coarse_points };
        let step = self.distance / intervals as f64;
        let fine_base = if self.origin_counts { 0.0 } else { step };
        let coarse = |k: usize| if k == intervals { self.distance } else { self.distance * k as f64 / intervals as f64 };
        let mut out = Vec::with_capacity(2 + self.coarse_points + self.fine_points);
        out.push((0.0, Segment::Origin));
        if !self.origin_counts {
            out.push((step, Segment::Coarse));
        }
        for m in 1..=self.fine_points {
            out.push((fine_base + step * m as f64 / (self.fine_points + 1) as f64, Segment::Fine));
        }
        let first = if self.origin_counts { 1 } else { 2 };
        for k in first..=intervals {
            out.push((coarse(k), Segment::Coarse));
        }
        out
    }

    /// Upper end of the first high-resolution section: the coarse offset
    /// right after the fine points.
    pub fn first_section_end(&self) -> f64 {
        let intervals = if self.origin_counts { self.coarse_points - 1 } else { self.coarse_points };
        let k = if self.origin_counts { 1 } else { 2 }.min(intervals);
        self.distance * k as f64 / intervals as f64
    }

    /// Seed of sample `k`; shared by every checkpoint of a line search.
    pub fn sample_seed(&self, k: usize) -> u64 {
        derive_seed(self.budget.seed, k as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSample {
    pub offset: f64,
    pub segment: Segment,
    pub stat: EvalStatistic,
}

/// Line search of one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointLine {
    pub step: u64,
    pub samples: Vec<LineSample>,
}

pub type LineSearchResult = Vec<CheckpointLine>;

/// Evaluates sample `k` of `spec` along `direction` from `theta`.
pub fn evaluate_line_sample(
    theta: &ParameterVector,
    arch: &Architecture,
    env: EnvSpec,
    direction: &Direction,
    spec: &LineSearchSpec,
    k: usize,
) -> Result<LineSample> {
    let (offset, segment) = spec.offsets()[k];
    let params = perturb(theta, direction, offset, None)?;
    let budget = spec.budget.with_seed(spec.sample_seed(k));
    let stat = evaluate(&params, arch, env, &budget, ActionMode::Stochastic)?;
    Ok(LineSample { offset, segment, stat })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffCriteria {
    pub drop_fraction: f64,
    pub range_fraction: f64,
    pub window: f64,
}

impl Default for CliffCriteria {
    fn default() -> Self {
        CliffCriteria { drop_fraction: 0.5, range_fraction: 0.25, window: 0.04 }
    }
}

impl CliffCriteria {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        if ok(self.drop_fraction) && ok(self.range_fraction) && ok(self.window) {
            Ok(())
        } else {
            Err(Error::Invalid("cliff criteria must lie in (0, 1]".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffVerdict {
    pub step: u64,
    pub is_cliff: bool,
    pub max_drop_fraction: f64,
    pub drop_over_global_range: f64,
    pub window_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffReport {
    pub criteria: CliffCriteria,
    pub global_min: f64,
    pub global_max: f64,
    /// All means were equal, so nothing can be a cliff.
    pub degenerate_range: bool,
    pub verdicts: Vec<CliffVerdict>,
}

impl CliffReport {
    pub fn cliff_steps(&self) -> Vec<u64> {
        self.verdicts.iter().filter(|v| v.is_cliff).map(|v| v.step).collect()
    }

    pub fn non_cliff_steps(&self) -> Vec<u64> {
        self.verdicts.iter().filter(|v| !v.is_cliff).map(|v| v.step).collect()
    }
}

// Offsets are products like 2 * 0.4 / 20 and may land an ulp past the window.
const WINDOW_SLACK: f64 = 1e-9;

/// Classifies every checkpoint of a line search.
///
/// Within `window`, over every ordered pair of samples `a` before `b`:
/// the largest relative drop `(mean_a - mean_b) / |mean_a|` and the largest
/// absolute drop `mean_a - mean_b`, the latter divided by the range of all
/// means in the whole result. A checkpoint is a cliff when both reach their
/// thresholds.
pub fn detect_cliffs(result: &[CheckpointLine], criteria: CliffCriteria) -> Result<CliffReport> {
    criteria.validate()?;
    if result.is_empty() || result.iter().all(|l| l.samples.is_empty()) {
        return Err(Error::Invalid("line search has no samples".into()));
    }
    let means = || result.iter().flat_map(|l| l.samples.iter().map(|s| s.stat.mean));
    let global_min = means().fold(f64::INFINITY, f64::min);
    let global_max = means().fold(f64::NEG_INFINITY, f64::max);
    let range = global_max - global_min;
    let degenerate_range = !(range > 0.0);

    let limit = criteria.window * (1.0 + WINDOW_SLACK);
    let verdicts = result
        .iter()
        .map(|line| {
            let mut window: Vec<&LineSample> =
                line.samples.iter().filter(|s| s.offset <= limit).collect();
            window.sort_by(|a, b| a.offset.total_cmp(&b.offset));
            let mut max_frac: f64 = 0.0;
            let mut max_abs: f64 = 0.0;
            for (ia, a) in window.iter().enumerate() {
                for b in &window[ia + 1..] {
                    let drop = a.stat.mean - b.stat.mean;
                    max_abs = max_abs.max(drop);
                    if a.stat.mean != 0.0 {
                        max_frac = max_frac.max(drop / a.stat.mean.abs());
                    }
                }
            }
            let share = if degenerate_range { 0.0 } else { max_abs / range };
            let is_cliff = !degenerate_range
                && max_frac >= criteria.drop_fraction
                && share >= criteria.range_fraction;
            CliffVerdict {
                step: line.step,
                is_cliff,
                max_drop_fraction: max_frac,
                drop_over_global_range: share,
                window_used: window.last().map_or(0.0, |s| s.offset),
            }
        })
        .collect();
    Ok(CliffReport { criteria, global_min, global_max, degenerate_range, verdicts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    Cliff,
    NonCliff,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Cliff => "cliff",
            Group::NonCliff => "non_cliff",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const PERCENT_EPS: f64 = 1e-8;

/// `100 (after - before) / max(|before|, 1e-8)`.
pub fn percent_change(before: f64, after: f64) -> f64 {
    100.0 * (after - before) / before.abs().max(PERCENT_EPS)
}

/// One (checkpoint, trial) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algo: Algo,
    pub learning_rate: f64,
    pub n_steps: u64,
    pub group: Group,
    /// Index of the checkpoint within its group.
    pub checkpoint: usize,
    pub trial: usize,
    pub before: EvalStatistic,
    pub after: EvalStatistic,
    pub percent_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub algo: Algo,
    pub learning_rate: f64,
    pub n_steps: u64,
    pub group: Group,
    pub mean_percent_change: f64,
    /// Standard error of the mean percent change across trials.
    pub stderr: f64,
    pub trials: usize,
}

/// Group means of the trial records, keyed by `(algo, lr, n_steps, group)`
/// in sorted order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<ExperimentRow> {
    let mut groups: BTreeMap<(Algo, u64, u64, Group), (f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let key = (r.algo, r.learning_rate.to_bits(), r.n_steps, r.group);
        groups.entry(key).or_insert((r.learning_rate, Vec::new())).1.push(r.percent_change);
    }
    groups
        .into_iter()
        .map(|((algo, _, n_steps, group), (learning_rate, xs))| {
            let s = EvalStatistic::from_returns(&xs, 0);
            ExperimentRow {
                algo,
                learning_rate,
                n_steps,
                group,
                mean_percent_change: s.mean,
                stderr: s.stderr,
                trials: xs.len(),
            }
        })
        .collect()
}

/// Training configuration for one experiment phase. PPO collects a single
/// rollout of `n_steps`; A2C keeps its own rollout length and performs
/// `ceil(n_steps / rollout)` updates.
pub fn experiment_config(base: &TrainConfig, algo: Algo, learning_rate: f64, n_steps: u64) -> TrainConfig {
    let mut c = if base.algo == algo { base.clone() } else { TrainConfig::for_algo(algo) };
    c.learning_rate = learning_rate;
    c.total_steps = n_steps;
    c.checkpoint_interval = n_steps;
    if algo == Algo::Ppo {
        c.n_steps = n_steps as usize;
    }
    c
}

/// Evaluates, trains for `config.total_steps` steps, and evaluates again.
/// Both evaluations share `eval_seed` so the comparison is paired.
pub fn run_trial(
    params: &ParameterVector,
    arch: &Architecture,
    env: EnvSpec,
    config: &TrainConfig,
    eval_episodes: u64,
    eval_seed: u64,
) -> Result<(EvalStatistic, EvalStatistic)> {
    let budget = EvalBudget::episodes(eval_episodes, eval_seed);
    let before = evaluate(params, arch, env, &budget, ActionMode::Stochastic)?;
    let mut trainer = Trainer::from_params(
        make_env(env, derive_seed(config.seed, 3)),
        arch.clone(),
        params.clone(),
        config.clone(),
    )?;
    trainer.train_steps(config.total_steps)?;
    let after = evaluate(trainer.params(), arch, env, &budget, ActionMode::Stochastic)?;
    Ok((before, after))
}
