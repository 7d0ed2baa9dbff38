//! Gradient line searches and cliff reports.
//!
//! ```text
//! <out>/linesearch.csv   checkpoint_step, offset, segment, mean, std, stderr, episodes, steps
//! <out>/linesearch.json  manifest
//! <out>/directions/step_<N>.json
//! <out>/cliffs.json
//! ```

use std::path::{Path, PathBuf};

use rsurf_core::cliff::{
    detect_cliffs, evaluate_line_sample, CheckpointLine, CliffCriteria, CliffReport, LineSample,
    LineSearchResult, LineSearchSpec, Segment,
};
use rsurf_core::direction::{l2_normalize, Direction, Provenance};
use rsurf_core::eval::EvalStatistic;
use rsurf_core::gradient::estimate_policy_gradient;
use rsurf_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_direction;
use crate::format::{self, field, float_field, read_json, write_json, write_text, VersionedCsv};
use crate::pool::parallel_map;
use crate::run::RunDirectory;
use crate::surface::{gradient_seed, BudgetRecord};
use crate::{Error, Result, TOOLKIT_VERSION};

pub const LINESEARCH_CSV: VersionedCsv = VersionedCsv {
    schema: "linesearch",
    version: 1,
    columns: &["checkpoint_step", "offset", "segment", "mean", "std", "stderr", "episodes", "steps"],
};

#[derive(Debug, Clone)]
pub struct LineSearchRequest {
    pub run: PathBuf,
    pub spec: LineSearchSpec,
    pub grad_steps: u64,
    /// Discount for the gradient estimate; the run's training gamma if unset.
    pub gamma: Option<f64>,
    /// Seeds the gradient estimates; evaluation seeds come from `spec.budget`.
    pub seed: u64,
    /// Restrict to these checkpoint steps; all checkpoints if unset.
    pub steps: Option<Vec<u64>>,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCheckpointEntry {
    pub step: u64,
    pub direction: String,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearchManifest {
    pub toolkit_version: String,
    pub run: String,
    pub env: String,
    pub distance: f64,
    pub coarse_points: usize,
    pub fine_points: usize,
    pub origin_counts: bool,
    pub budget: BudgetRecord,
    pub grad_steps: u64,
    pub gamma: f64,
    pub seed: u64,
    pub workers: usize,
    pub csv: String,
    pub checkpoints: Vec<LineCheckpointEntry>,
}

pub fn line_search_csv(result: &[CheckpointLine]) -> String {
    LINESEARCH_CSV.render(result.iter().flat_map(|line| {
        line.samples.iter().map(move |s| {
            vec![
                line.step.to_string(),
                format::float(s.offset),
                s.segment.as_str().into(),
                format::float(s.stat.mean),
                format::float(s.stat.std),
                format::float(s.stat.stderr),
                s.stat.episodes.to_string(),
                s.stat.steps.to_string(),
            ]
        })
    }))
}

/// Reads `linesearch.csv`, keeping checkpoints in file order.
pub fn read_line_search(path: &Path) -> Result<LineSearchResult> {
    let mut out: Vec<CheckpointLine> = Vec::new();
    for r in LINESEARCH_CSV.read(path)? {
        let step: u64 = field(path, &r[0], "checkpoint_step")?;
        let sample = LineSample {
            offset: float_field(path, &r[1], "offset")?,
            segment: Segment::parse(&r[2]).ok_or_else(|| Error::format(path, format!("bad segment `{}`", r[2])))?,
            stat: EvalStatistic {
                mean: float_field(path, &r[3], "mean")?,
                std: float_field(path, &r[4], "std")?,
                stderr: float_field(path, &r[5], "stderr")?,
                episodes: field(path, &r[6], "episodes")?,
                steps: field(path, &r[7], "steps")?,
            },
        };
        match out.last_mut() {
            Some(line) if line.step == step => line.samples.push(sample),
            _ => {
                if out.iter().any(|l| l.step == step) {
                    return Err(Error::format(path, format!("rows for step {step} are not contiguous")));
                }
                out.push(CheckpointLine { step, samples: vec![sample] });
            }
        }
    }
    Ok(out)
}

/// Estimates the normalized gradient at every selected checkpoint and
/// evaluates the line layout along it.
pub fn line_search(req: &LineSearchRequest) -> Result<(LineSearchResult, LineSearchManifest)> {
    req.spec.validate()?;
    let run = RunDirectory::open(&req.run)?;
    let steps = match &req.steps {
        Some(s) => {
            if let Some(missing) = s.iter().find(|x| !run.checkpoint_steps.contains(x)) {
                return Err(Error::Usage(format!("run has no checkpoint at step {missing}")));
            }
            s.clone()
        }
        None => run.checkpoint_steps.clone(),
    };
    let gamma = req.gamma.unwrap_or(run.config.gamma);
    let spec = run.env_spec();
    let ckpts = steps.iter().map(|&s| run.load_checkpoint(s)).collect::<Result<Vec<_>>>()?;

    let gradients = parallel_map(req.workers, ckpts.len(), |c| -> Result<(Direction, f64)> {
        let seed = derive_seed(gradient_seed(req.seed), ckpts[c].train_step);
        let g = estimate_policy_gradient(&ckpts[c].params, &run.architecture, spec, req.grad_steps, gamma, seed)?;
        let provenance = Provenance::PolicyGradient { seed, env_steps: req.grad_steps, gamma };
        Ok((l2_normalize(&g, provenance)?, g.norm()))
    })?;

    let per_line = req.spec.offsets().len();
    let samples = parallel_map(req.workers, ckpts.len() * per_line, |k| {
        let (c, s) = (k / per_line, k % per_line);
        evaluate_line_sample(&ckpts[c].params, &run.architecture, spec, &gradients[c].0, &req.spec, s)
    })?;

    let mut result = Vec::with_capacity(ckpts.len());
    let mut entries = Vec::with_capacity(ckpts.len());
    let mut it = samples.into_iter();
    for (ckpt, (direction, norm)) in ckpts.iter().zip(&gradients) {
        let file = format!("directions/step_{}.json", ckpt.train_step);
        save_direction(&req.out.join(&file), direction)?;
        entries.push(LineCheckpointEntry { step: ckpt.train_step, direction: file, gradient_norm: *norm });
        result.push(CheckpointLine { step: ckpt.train_step, samples: it.by_ref().take(per_line).collect() });
    }
    write_text(&req.out.join("linesearch.csv"), &line_search_csv(&result))?;
    let manifest = LineSearchManifest {
        toolkit_version: TOOLKIT_VERSION.into(),
        run: req.run.display().to_string(),
        env: run.env.as_str().into(),
        distance: req.spec.distance,
        coarse_points: req.spec.coarse_points,
        fine_points: req.spec.fine_points,
        origin_counts: req.spec.origin_counts,
        budget: (&req.spec.budget).into(),
        grad_steps: req.grad_steps,
        gamma,
        seed: req.seed,
        workers: req.workers,
        csv: "linesearch.csv".into(),
        checkpoints: entries,
    };
    write_json(&req.out.join("linesearch.json"), &manifest)?;
    Ok((result, manifest))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRecord {
    pub drop_fraction: f64,
    pub range_fraction: f64,
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub checkpoint_step: u64,
    pub is_cliff: bool,
    pub max_drop_fraction: f64,
    pub drop_over_global_range: f64,
    pub window_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffsFile {
    pub toolkit_version: String,
    pub linesearch: String,
    /// Run directory recorded by the line search, when known.
    pub run: Option<String>,
    pub criteria: CriteriaRecord,
    pub global_min: f64,
    pub global_max: f64,
    pub degenerate_range: bool,
    pub cliff_steps: Vec<u64>,
    pub non_cliff_steps: Vec<u64>,
    pub checkpoints: Vec<VerdictRecord>,
}

impl CliffsFile {
    pub fn new(report: &CliffReport, linesearch: &Path, run: Option<String>) -> CliffsFile {
        let c = report.criteria;
        CliffsFile {
            toolkit_version: TOOLKIT_VERSION.into(),
            linesearch: linesearch.display().to_string(),
            run,
            criteria: CriteriaRecord { drop_fraction: c.drop_fraction, range_fraction: c.range_fraction, window: c.window },
            global_min: report.global_min,
            global_max: report.global_max,
            degenerate_range: report.degenerate_range,
            cliff_steps: report.cliff_steps(),
            non_cliff_steps: report.non_cliff_steps(),
            checkpoints: report
                .verdicts
                .iter()
                .map(|v| VerdictRecord {
                    checkpoint_step: v.step,
                    is_cliff: v.is_cliff,
                    max_drop_fraction: v.max_drop_fraction,
                    drop_over_global_range: v.drop_over_global_range,
                    window_used: v.window_used,
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<CliffsFile> {
        read_json(path)
    }
}

/// Classifies every checkpoint of a line search and writes `cliffs.json`
/// to `out` (a file path).
pub fn run_cliffs(linesearch: &Path, criteria: CliffCriteria, out: &Path) -> Result<(CliffReport, CliffsFile)> {
    criteria.validate()?;
    let result = read_line_search(linesearch)?;
    let report = detect_cliffs(&result, criteria)?;
    let manifest_path = linesearch.with_file_name("linesearch.json");
    let run = if manifest_path.exists() {
        Some(read_json::<LineSearchManifest>(&manifest_path)?.run)
    } else {
        None
    };
    let file = CliffsFile::new(&report, linesearch, run);
    write_json(out, &file)?;
    Ok((report, file))
}
