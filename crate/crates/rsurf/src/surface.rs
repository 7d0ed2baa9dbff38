//! Two-direction reward surfaces and gradient heat maps.
//!
//! ```text
//! <out>/surface.csv   i, j, alpha, beta, mean, std, stderr, episodes, steps
//! <out>/surface.json  manifest
//! <out>/d1.json, <out>/d2.json
//! ```

use std::path::{Path, PathBuf};

use rsurf_core::direction::{l2_normalize, sample_filter_normalized_direction, Direction, Provenance};
use rsurf_core::eval::{evaluate_grid_point, EvalBudget, EvalStatistic, GridSpec};
use rsurf_core::gradient::estimate_policy_gradient;
use rsurf_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{save_direction, Checkpoint, ProvenanceRecord};
use crate::format::{self, float_field, field, write_json, write_text, VersionedCsv};
use crate::pool::parallel_map;
use crate::{Error, Result, TOOLKIT_VERSION};

pub const SURFACE_CSV: VersionedCsv = VersionedCsv {
    schema: "surface",
    version: 1,
    columns: &["i", "j", "alpha", "beta", "mean", "std", "stderr", "episodes", "steps"],
};

/// Stream indices for direction and gradient seeds, far from the per-point
/// indices `0..N*N`.
const DIRECTION_STREAM: u64 = 1 << 40;

pub fn direction_seed(seed: u64, axis: u64) -> u64 {
    derive_seed(seed, DIRECTION_STREAM + axis)
}

pub fn gradient_seed(seed: u64) -> u64 {
    derive_seed(seed, DIRECTION_STREAM + 2)
}

/// Evaluated lattice, `cells[i * N + j]` at `(offsets[i], offsets[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub offsets: Vec<f64>,
    pub cells: Vec<EvalStatistic>,
}

impl SurfaceGrid {
    pub fn size(&self) -> usize {
        self.offsets.len()
    }

    pub fn at(&self, i: usize, j: usize) -> &EvalStatistic {
        &self.cells[i * self.size() + j]
    }

    pub fn center(&self) -> &EvalStatistic {
        let c = self.size() / 2;
        self.at(c, c)
    }

    pub fn max_mean(&self) -> f64 {
        self.cells.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let n = self.size();
        SURFACE_CSV.render((0..n * n).map(|k| {
            let (i, j) = (k / n, k % n);
            let c = &self.cells[k];
            vec![
                i.to_string(),
                j.to_string(),
                format::float(self.offsets[i]),
                format::float(self.offsets[j]),
                format::float(c.mean),
                format::float(c.std),
                format::float(c.stderr),
                c.episodes.to_string(),
                c.steps.to_string(),
            ]
        }))
    }

    pub fn read_csv(path: &Path) -> Result<SurfaceGrid> {
        let rows = SURFACE_CSV.read(path)?;
        let n = (rows.len() as f64).sqrt().round() as usize;
        if n * n != rows.len() || n == 0 {
            return Err(Error::format(path, format!("{} rows do not form a square grid", rows.len())));
        }
        let mut offsets = vec![f64::NAN; n];
        let mut cells = vec![None; n * n];
        for r in &rows {
            let i: usize = field(path, &r[0], "i")?;
            let j: usize = field(path, &r[1], "j")?;
            if i >= n || j >= n {
                return Err(Error::format(path, format!("index ({i}, {j}) out of range")));
            }
            offsets[i] = float_field(path, &r[2], "alpha")?;
            cells[i * n + j] = Some(EvalStatistic {
                mean: float_field(path, &r[4], "mean")?,
                std: float_field(path, &r[5], "std")?,
                stderr: float_field(path, &r[6], "stderr")?,
                episodes: field(path, &r[7], "episodes")?,
                steps: field(path, &r[8], "steps")?,
            });
        }
        let cells = cells
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::format(path, "missing grid cells"))?;
        Ok(SurfaceGrid { offsets, cells })
    }
}

/// Evaluates every lattice point; results are independent of `workers`.
pub fn evaluate_grid(
    ckpt: &Checkpoint,
    d1: &Direction,
    d2: &Direction,
    grid: &GridSpec,
    workers: usize,
) -> Result<SurfaceGrid> {
    grid.validate()?;
    let n = grid.samples_per_axis;
    let cells = parallel_map(workers, n * n, |k| {
        evaluate_grid_point(&ckpt.params, &ckpt.architecture, ckpt.env_spec(), d1, d2, grid, k / n, k % n)
    })?;
    Ok(SurfaceGrid { offsets: grid.offsets(), cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRecord {
    pub min_steps: u64,
    pub min_episodes: u64,
    pub gamma_eval: f64,
    pub seed: u64,
}

impl From<&EvalBudget> for BudgetRecord {
    fn from(b: &EvalBudget) -> Self {
        BudgetRecord { min_steps: b.min_steps, min_episodes: b.min_episodes, gamma_eval: b.gamma_eval, seed: b.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEntry {
    pub file: String,
    pub kind: String,
    pub seed_or_source: ProvenanceRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceManifest {
    pub toolkit_version: String,
    pub kind: String,
    pub checkpoint: String,
    pub env: String,
    pub train_step: u64,
    pub directions: Vec<DirectionEntry>,
    pub range: f64,
    pub samples_per_axis: usize,
    pub budget: BudgetRecord,
    pub workers: usize,
    pub csv: String,
    pub center_mean: f64,
    pub max_mean: f64,
}

/// How the two axes of a surface are chosen.
#[derive(Debug, Clone)]
pub enum Axes {
    /// Two filter-normalized random directions from these seeds.
    Random { seed1: u64, seed2: u64 },
    /// L2-normalized policy gradient against one filter-normalized random
    /// direction.
    Gradient { env_steps: u64, gamma: f64, gradient_seed: u64, random_seed: u64 },
    /// Directions supplied as files.
    Files(Direction, Direction),
}

#[derive(Debug, Clone)]
pub struct SurfaceRequest {
    pub checkpoint: PathBuf,
    pub axes: Axes,
    pub grid: GridSpec,
    pub workers: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SurfaceOutput {
    pub grid: SurfaceGrid,
    pub manifest: SurfaceManifest,
    pub directions: [Direction; 2],
}

fn axis_directions(ckpt: &Checkpoint, axes: &Axes) -> Result<(&'static str, Direction, Direction)> {
    Ok(match axes {
        Axes::Random { seed1, seed2 } => (
            "random",
            sample_filter_normalized_direction(&ckpt.params, *seed1),
            sample_filter_normalized_direction(&ckpt.params, *seed2),
        ),
        Axes::Gradient { env_steps, gamma, gradient_seed, random_seed } => {
            let g = estimate_policy_gradient(
                &ckpt.params,
                &ckpt.architecture,
                ckpt.env_spec(),
                *env_steps,
                *gamma,
                *gradient_seed,
            )?;
            let provenance = Provenance::PolicyGradient { seed: *gradient_seed, env_steps: *env_steps, gamma: *gamma };
            (
                "gradient",
                l2_normalize(&g, provenance)?,
                sample_filter_normalized_direction(&ckpt.params, *random_seed),
            )
        }
        Axes::Files(a, b) => {
            ckpt.params.check_shape(&a.params)?;
            ckpt.params.check_shape(&b.params)?;
            ("files", a.clone(), b.clone())
        }
    })
}

/// A checkpoint inside the output's parent directory is recorded relative
/// to the output directory, so relocated trees keep identical manifests.
fn manifest_path(checkpoint: &Path, out: &Path) -> String {
    match out.parent().and_then(|p| checkpoint.strip_prefix(p).ok()) {
        Some(rest) if !out.parent().is_some_and(|p| p.as_os_str().is_empty()) => {
            Path::new("..").join(rest).display().to_string()
        }
        _ => checkpoint.display().to_string(),
    }
}

/// Builds the directions, evaluates the grid and writes all outputs.
pub fn run_surface(req: &SurfaceRequest) -> Result<SurfaceOutput> {
    req.grid.validate()?;
    let ckpt = Checkpoint::load(&req.checkpoint)?;
    let (kind, d1, d2) = axis_directions(&ckpt, &req.axes)?;
    let grid = evaluate_grid(&ckpt, &d1, &d2, &req.grid, req.workers)?;
    let mut entries = Vec::new();
    for (name, d) in [("d1.json", &d1), ("d2.json", &d2)] {
        save_direction(&req.out.join(name), d)?;
        entries.push(DirectionEntry {
            file: name.into(),
            kind: d.kind.as_str().into(),
            seed_or_source: (&d.provenance).into(),
        });
    }
    write_text(&req.out.join("surface.csv"), &grid.to_csv())?;
    let manifest = SurfaceManifest {
        toolkit_version: TOOLKIT_VERSION.into(),
        kind: kind.into(),
        checkpoint: manifest_path(&req.checkpoint, &req.out),
        env: ckpt.env.as_str().into(),
        train_step: ckpt.train_step,
        directions: entries,
        range: req.grid.range,
        samples_per_axis: req.grid.samples_per_axis,
        budget: (&req.grid.budget).into(),
        workers: req.workers,
        csv: "surface.csv".into(),
        center_mean: grid.center().mean,
        max_mean: grid.max_mean(),
    };
    write_json(&req.out.join("surface.json"), &manifest)?;
    Ok(SurfaceOutput { grid, manifest, directions: [d1, d2] })
}
