use alloc::vec::Vec;

use super::{ActionDistribution, Architecture, Dense, Head, ParameterVector};
use crate::env::Action;
use crate::{Error, Result};

/// Activations kept from a forward pass so [`Forward::accumulate_gradient`]
/// can run without recomputing them.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Inputs to every layer, indexed like `ParameterVector::layers`.
    inputs: Vec<Vec<f64>>,
    /// Post-tanh outputs of hidden layers (empty for head layers).
    hidden_out: Vec<Vec<f64>>,
    pub dist: ActionDistribution,
    pub value: f64,
}

/// Coefficients of the per-sample scalar whose gradient `backward` returns:
///
/// `log_prob * ln pi(a|s) + entropy * H(pi(.|s)) + value * (V(s) - value_target)^2`
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossWeights {
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
    pub value_target: f64,
}

fn affine(layer: &Dense, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(layer.bias.iter().enumerate().map(|(j, b)| {
        b + layer.row(j).iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
    }));
}

/// Runs the trunk starting at layer `start` and returns the top activation.
fn run_trunk(
    params: &ParameterVector,
    arch: &Architecture,
    start: usize,
    obs: &[f64],
    inputs: &mut [Vec<f64>],
    hidden_out: &mut [Vec<f64>],
) -> Vec<f64> {
    let mut h = obs.to_vec();
    for k in 0..arch.depth() {
        let idx = start + k;
        let mut z = Vec::new();
        affine(&params.layers[idx], &h, &mut z);
        for v in &mut z {
            *v = libm::tanh(*v);
        }
        inputs[idx] = h;
        hidden_out[idx] = z.clone();
        h = z;
    }
    h
}

pub fn forward(params: &ParameterVector, arch: &Architecture, obs: &[f64]) -> Result<Forward> {
    if obs.len() != arch.obs_dim {
        return Err(Error::Shape(alloc::format!(
            "observation has length {}, expected {}",
            obs.len(),
            arch.obs_dim
        )));
    }
    let n_layers = params.layers.len();
    if arch.layer_shapes().len() != n_layers || params.log_std.len() != arch.log_std_dim() {
        return Err(Error::Shape("parameters do not match architecture".into()));
    }
    let mut inputs = alloc::vec![Vec::new(); n_layers];
    let mut hidden_out = alloc::vec![Vec::new(); n_layers];

    let top = run_trunk(params, arch, 0, obs, &mut inputs, &mut hidden_out);
    let ph = arch.policy_head_index();
    let mut head = Vec::new();
    affine(&params.layers[ph], &top, &mut head);
    inputs[ph] = top.clone();

    let vtop = if arch.shared_trunk {
        top
    } else {
        run_trunk(params, arch, arch.value_trunk_start(), obs, &mut inputs, &mut hidden_out)
    };
    let vh = arch.value_head_index();
    let mut v = Vec::new();
    affine(&params.layers[vh], &vtop, &mut v);
    inputs[vh] = vtop;

    let dist = match arch.head {
        Head::Categorical { .. } => ActionDistribution::Categorical { logits: head },
        Head::Gaussian { .. } => {
            ActionDistribution::Gaussian { mean: head, log_std: params.log_std.clone() }
        }
    };
    Ok(Forward { inputs, hidden_out, dist, value: v[0] })
}

impl Forward {
    /// Adds `d(weighted scalar)/d(params)` for this sample into `grad`.
    pub fn accumulate_gradient(
        &self,
        params: &ParameterVector,
        arch: &Architecture,
        action: &Action,
        weights: &LossWeights,
        grad: &mut ParameterVector,
    ) -> Result<()> {
        let d_head: Vec<f64> = match (&self.dist, action) {
            (ActionDistribution::Categorical { logits }, Action::Discrete(a)) => {
                if *a >= logits.len() {
                    return Err(Error::Invalid("action index out of range".into()));
                }
                let probs = self.dist.probs();
                let ent = self.dist.entropy();
                probs
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let onehot = if k == *a { 1.0 } else { 0.0 };
                        // dH/dz_k = -p_k (ln p_k + H)
                        let d_ent = if *p > 0.0 { -p * (libm::log(*p) + ent) } else { 0.0 };
                        weights.log_prob * (onehot - p) + weights.entropy * d_ent
                    })
                    .collect()
            }
            (ActionDistribution::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                if x.len() != mean.len() {
                    return Err(Error::Shape("action dimension".into()));
                }
                let mut d_mean = Vec::with_capacity(mean.len());
                for i in 0..mean.len() {
                    let inv_var = libm::exp(-2.0 * log_std[i]);
                    let diff = x[i] - mean[i];
                    d_mean.push(weights.log_prob * diff * inv_var);
                    grad.log_std[i] +=
                        weights.log_prob * (diff * diff * inv_var - 1.0) + weights.entropy;
                }
                d_mean
            }
            _ => return Err(Error::Invalid("action kind does not match head".into())),
        };
        let d_value = 2.0 * weights.value * (self.value - weights.value_target);

        let ph = arch.policy_head_index();
        let d_top = self.backprop_layer(params, ph, &d_head, grad);
        let vh = arch.value_head_index();
        let d_vtop = self.backprop_layer(params, vh, &[d_value], grad);

        if arch.shared_trunk {
            let d: Vec<f64> = d_top.iter().zip(&d_vtop).map(|(a, b)| a + b).collect();
            self.backprop_trunk(params, arch, 0, d, grad);
        } else {
            self.backprop_trunk(params, arch, 0, d_top, grad);
            self.backprop_trunk(params, arch, arch.value_trunk_start(), d_vtop, grad);
        }

        if grad.values().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        Ok(())
    }

    /// Accumulates weight/bias gradients of layer `idx` given the gradient at
    /// its (pre-activation) output and returns the gradient at its input.
    fn backprop_layer(
        &self,
        params: &ParameterVector,
        idx: usize,
        d_out: &[f64],
        grad: &mut ParameterVector,
    ) -> Vec<f64> {
        let layer = &params.layers[idx];
        let x = &self.inputs[idx];
        let g = &mut grad.layers[idx];
        let mut d_in = alloc::vec![0.0; layer.inp];
        for (j, d) in d_out.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            g.bias[j] += d;
            let row = j * layer.inp;
            for i in 0..layer.inp {
                g.weight[row + i] += d * x[i];
                d_in[i] += d * layer.weight[row + i];
            }
        }
        d_in
    }

    fn backprop_trunk(
        &self,
        params: &ParameterVector,
        arch: &Architecture,
        start: usize,
        mut d: Vec<f64>,
        grad: &mut ParameterVector,
    ) {
        for k in (0..arch.depth()).rev() {
            let idx = start + k;
            for (dv, h) in d.iter_mut().zip(&self.hidden_out[idx]) {
                *dv *= 1.0 - h * h;
            }
            d = self.backprop_layer(params, idx, &d, grad);
        }
    }
}

/// Gradient of the weighted scalar for a single `(obs, action)` sample.
pub fn backward(
    params: &ParameterVector,
    arch: &Architecture,
    obs: &[f64],
    action: &Action,
    weights: &LossWeights,
) -> Result<ParameterVector> {
    let fwd = forward(params, arch, obs)?;
    let mut grad = params.zeros_like();
    fwd.accumulate_gradient(params, arch, action, weights, &mut grad)?;
    Ok(grad)
}
