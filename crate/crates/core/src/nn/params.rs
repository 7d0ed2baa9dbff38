use alloc::vec;
use alloc::vec::Vec;

use super::Architecture;
use crate::rng::Rng;
use crate::{Error, Result};

/// One fully connected layer, weight stored row-major `out x in`.
///
/// Row `j` of the weight together with `bias[j]` is filter `j` of the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub out: usize,
    pub inp: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(out: usize, inp: usize) -> Dense {
        Dense { out, inp, weight: vec![0.0; out * inp], bias: vec![0.0; out] }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.weight[j * self.inp..(j + 1) * self.inp]
    }
}

/// All trainable parameters of an actor-critic: dense layers in the order
/// given by [`Architecture::layer_shapes`] and, for Gaussian heads, the
/// log-std vector (treated as a single filter).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub layers: Vec<Dense>,
    pub log_std: Vec<f64>,
}

/// Uniform init bound `INIT_GAIN * sqrt(3 / fan_in)` (unit-variance
/// preserving for linear layers); policy heads are further scaled by
/// `POLICY_HEAD_SCALE` so the initial policy is close to uniform. Biases and
/// log-std start at zero.
pub const INIT_GAIN: f64 = 1.0;
pub const POLICY_HEAD_SCALE: f64 = 0.01;

impl ParameterVector {
    pub fn zeros(arch: &Architecture) -> ParameterVector {
        ParameterVector {
            layers: arch.layer_shapes().into_iter().map(|(o, i)| Dense::zeros(o, i)).collect(),
            log_std: vec![0.0; arch.log_std_dim()],
        }
    }

    pub fn init(arch: &Architecture, rng: &mut Rng) -> ParameterVector {
        let mut p = Self::zeros(arch);
        let policy_head = arch.policy_head_index();
        for (idx, layer) in p.layers.iter_mut().enumerate() {
            let mut bound = INIT_GAIN * libm::sqrt(3.0 / layer.inp as f64);
            if idx == policy_head {
                bound *= POLICY_HEAD_SCALE;
            }
            for w in &mut layer.weight {
                *w = rng.uniform_range(-bound, bound);
            }
        }
        p
    }

    pub fn zeros_like(&self) -> ParameterVector {
        ParameterVector {
            layers: self.layers.iter().map(|l| Dense::zeros(l.out, l.inp)).collect(),
            log_std: vec![0.0; self.log_std.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum::<usize>()
            + self.log_std.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of filters: one per output neuron, plus one for the log-std
    /// vector when present.
    pub fn filter_count(&self) -> usize {
        self.layers.iter().map(|l| l.out).sum::<usize>() + usize::from(!self.log_std.is_empty())
    }

    /// Block shapes in flattening order: for each layer `[out, in]` then
    /// `[out]`, then `[dim]` for the log-std if present.
    pub fn block_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for l in &self.layers {
            shapes.push(vec![l.out, l.inp]);
            shapes.push(vec![l.out]);
        }
        if !self.log_std.is_empty() {
            shapes.push(vec![self.log_std.len()]);
        }
        shapes
    }

    /// Borrowed blocks in flattening order, matching [`Self::block_shapes`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        if !self.log_std.is_empty() {
            out.push(&self.log_std);
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        if !self.log_std.is_empty() {
            out.push(&mut self.log_std);
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.len());
        for b in self.blocks() {
            flat.extend_from_slice(b);
        }
        flat
    }

    pub fn unflatten(arch: &Architecture, flat: &[f64]) -> Result<ParameterVector> {
        let mut p = Self::zeros(arch);
        if flat.len() != p.len() {
            return Err(Error::Shape(alloc::format!(
                "expected {} parameters, got {}",
                p.len(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for b in p.blocks_mut() {
            let n = b.len();
            b.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(p)
    }

    /// Rebuilds parameters from explicit blocks, checking every shape.
    pub fn from_blocks(arch: &Architecture, blocks: &[(Vec<usize>, Vec<f64>)]) -> Result<Self> {
        let mut p = Self::zeros(arch);
        let shapes = p.block_shapes();
        if shapes.len() != blocks.len() {
            return Err(Error::Shape(alloc::format!(
                "expected {} blocks, got {}",
                shapes.len(),
                blocks.len()
            )));
        }
        for ((dst, expected), (shape, data)) in p.blocks_mut().into_iter().zip(&shapes).zip(blocks)
        {
            if shape != expected || data.len() != dst.len() {
                return Err(Error::Shape(alloc::format!(
                    "block shape {shape:?} does not match {expected:?}"
                )));
            }
            dst.copy_from_slice(data);
        }
        Ok(p)
    }

    pub fn same_shape(&self, other: &ParameterVector) -> bool {
        self.log_std.len() == other.log_std.len()
            && self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.out == b.out && a.inp == b.inp)
    }

    pub fn check_shape(&self, other: &ParameterVector) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape("parameter vectors have different layouts".into()))
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(&l.bias))
            .chain(&self.log_std)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
            .chain(self.log_std.iter_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    /// `self += scale * other`. Shapes must already match.
    pub fn axpy(&mut self, scale: f64, other: &ParameterVector) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.values_mut() {
            *v *= c;
        }
    }

    pub fn dot(&self, other: &ParameterVector) -> f64 {
        self.values().zip(other.values()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Euclidean norm of every filter, layer by layer, log-std last.
    pub fn filter_norms(&self) -> Vec<f64> {
        let mut norms = Vec::with_capacity(self.filter_count());
        for l in &self.layers {
            for j in 0..l.out {
                let sq: f64 = l.row(j).iter().map(|w| w * w).sum::<f64>() + l.bias[j] * l.bias[j];
                norms.push(libm::sqrt(sq));
            }
        }
        if !self.log_std.is_empty() {
            norms.push(libm::sqrt(self.log_std.iter().map(|v| v * v).sum()));
        }
        norms
    }

    /// Multiplies every filter `f` by `factors[f]` (same order as
    /// [`Self::filter_norms`]).
    pub fn scale_filters(&mut self, factors: &[f64]) {
        let mut f = 0;
        for l in &mut self.layers {
            for j in 0..l.out {
                let c = factors[f];
                for w in &mut l.weight[j * l.inp..(j + 1) * l.inp] {
                    *w *= c;
                }
                l.bias[j] *= c;
                f += 1;
            }
        }
        if !self.log_std.is_empty() {
            let c = factors[f];
            for v in &mut self.log_std {
                *v *= c;
            }
        }
    }
}
