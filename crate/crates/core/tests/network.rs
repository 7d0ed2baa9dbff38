mod common;

use common::*;
use rsurf_core::env::{Action, EnvName, EnvSpec};
use rsurf_core::nn::{backward, forward, ActionDistribution, Architecture, Dense, Head, LossWeights, ParameterVector};
use rsurf_core::rng::Rng;

/// Direct re-evaluation of the affine/tanh chain from the raw layer blocks.
fn oracle(params: &ParameterVector, arch: &Architecture, obs: &[f64]) -> (Vec<f64>, f64) {
    let apply = |layer: &Dense, x: &[f64], squash: bool| -> Vec<f64> {
        (0..layer.out)
            .map(|r| {
                let mut z = layer.bias[r];
                for c in 0..layer.inp {
                    z += layer.weight[r * layer.inp + c] * x[c];
                }
                if squash { z.tanh() } else { z }
            })
            .collect()
    };
    let depth = arch.hidden_sizes.len();
    let mut h = obs.to_vec();
    for layer in &params.layers[..depth] {
        h = apply(layer, &h, true);
    }
    let head = apply(&params.layers[depth], &h, false);
    let value_in = if arch.shared_trunk {
        h
    } else {
        let mut v = obs.to_vec();
        for layer in &params.layers[depth + 1..2 * depth + 1] {
            v = apply(layer, &v, true);
        }
        v
    };
    let value = apply(params.layers.last().unwrap(), &value_in, false)[0];
    (head, value)
}

#[test]
fn forward_matches_matrix_oracle() {
    let mut rng = Rng::new(1);
    for arch in architectures() {
        for _ in 0..10 {
            let p = random_params(&arch, 0.7, &mut rng);
            let obs = random_obs(&arch, &mut rng);
            let f = forward(&p, &arch, &obs).unwrap();
            let (head, value) = oracle(&p, &arch, &obs);
            let got = match &f.dist {
                ActionDistribution::Categorical { logits } => logits.clone(),
                ActionDistribution::Gaussian { mean, log_std } => {
                    assert_eq!(log_std, &p.log_std);
                    mean.clone()
                }
            };
            for (g, w) in got.iter().zip(&head).chain([(&f.value, &value)]) {
                assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
            }
        }
    }
}

#[test]
fn zero_network_is_uniform_with_zero_value() {
    let arch = Architecture::for_env(&EnvSpec::of(EnvName::CartPole));
    let f = forward(&ParameterVector::zeros(&arch), &arch, &[0.3, -1.0, 2.0, 0.1]).unwrap();
    assert_eq!(f.dist.probs(), vec![0.5, 0.5]);
    assert_eq!(f.value, 0.0);
}

#[test]
fn forward_rejects_wrong_observation_length() {
    let arch = Architecture::for_env(&EnvSpec::of(EnvName::CartPole));
    assert!(forward(&ParameterVector::zeros(&arch), &arch, &[0.0; 3]).is_err());
}

fn weighted_scalar(p: &ParameterVector, arch: &Architecture, obs: &[f64], action: &Action, w: &LossWeights) -> f64 {
    let f = forward(p, arch, obs).unwrap();
    w.log_prob * f.dist.log_prob(action).unwrap()
        + w.entropy * f.dist.entropy()
        + w.value * (f.value - w.value_target).powi(2)
}

#[test]
fn backward_matches_finite_differences_on_twenty_fixtures() {
    let mut rng = Rng::new(7);
    let archs = architectures();
    for k in 0..20 {
        let arch = &archs[k % archs.len()];
        let p = random_params(arch, 0.5, &mut rng);
        let obs = random_obs(arch, &mut rng);
        let action = random_action(arch, &mut rng);
        let w = LossWeights {
            log_prob: rng.normal(),
            entropy: rng.normal(),
            value: rng.normal(),
            value_target: rng.normal(),
        };
        let g = backward(&p, arch, &obs, &action, &w).unwrap().flatten();
        let fd = finite_differences(&p, arch, 1e-5, |q| weighted_scalar(q, arch, &obs, &action, &w));
        let err = max_relative_error(&g, &fd, 1e-8);
        assert!(err < 1e-4, "fixture {k}: relative error {err}");
    }
}

fn bias_gradient_of_head(arch: &Architecture, w: LossWeights, action: Action) -> Vec<f64> {
    let g = backward(&ParameterVector::zeros(arch), arch, &[1.0], &action, &w).unwrap();
    g.layers[arch.hidden_sizes.len()].bias.clone()
}

#[test]
fn softmax_log_prob_gradient_at_uniform() {
    let arch = bandit_arch(2);
    let w = LossWeights { log_prob: 1.0, ..Default::default() };
    assert_eq!(bias_gradient_of_head(&arch, w, Action::Discrete(0)), vec![0.5, -0.5]);
}

#[test]
fn entropy_is_stationary_at_uniform() {
    let arch = bandit_arch(2);
    let w = LossWeights { entropy: 1.0, ..Default::default() };
    let g = bias_gradient_of_head(&arch, w, Action::Discrete(0));
    assert!(g.iter().all(|v| v.abs() < 1e-15), "{g:?}");
}

#[test]
fn categorical_sampling_frequency() {
    let d = ActionDistribution::Categorical { logits: vec![0.0, 0.0] };
    let mut rng = Rng::new(3);
    let mut zeros = 0;
    for _ in 0..10_000 {
        let (a, lp) = d.sample(&mut rng);
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
        if a == Action::Discrete(0) {
            zeros += 1;
        }
    }
    let freq = zeros as f64 / 10_000.0;
    assert!((0.47..=0.53).contains(&freq), "{freq}");
}

#[test]
fn sampled_log_probs_match_log_prob() {
    let mut rng = Rng::new(4);
    let dists = [
        ActionDistribution::Categorical { logits: vec![0.3, -1.2, 2.0] },
        ActionDistribution::Gaussian { mean: vec![0.5, -0.25], log_std: vec![-0.3, 0.4] },
    ];
    for d in &dists {
        for _ in 0..100 {
            let (a, lp) = d.sample(&mut rng);
            assert!((d.log_prob(&a).unwrap() - lp).abs() < 1e-12);
        }
    }
    let near_det = ActionDistribution::Categorical { logits: vec![100.0, 0.0] };
    let (a, lp) = near_det.sample(&mut rng);
    assert_eq!(a, Action::Discrete(0));
    assert!(lp.abs() < 1e-40);
}

#[test]
fn standard_normal_density() {
    let d = ActionDistribution::Gaussian { mean: vec![0.0], log_std: vec![0.0] };
    let mut rng = Rng::new(5);
    let (a, lp) = d.sample(&mut rng);
    let Action::Continuous(u) = a else { panic!("continuous action expected") };
    let want = -0.5 * u[0] * u[0] - 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((lp - want).abs() < 1e-14);
}

#[test]
fn flatten_round_trip_is_bit_exact() {
    let mut rng = Rng::new(6);
    for arch in architectures() {
        let p = random_params(&arch, 3.0, &mut rng);
        let q = ParameterVector::unflatten(&arch, &p.flatten()).unwrap();
        assert!(p.flatten().iter().zip(q.flatten()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn filter_count_is_neurons_plus_log_std() {
    for arch in architectures() {
        let p = ParameterVector::zeros(&arch);
        let neurons: usize = p.layers.iter().map(|l| l.out).sum();
        let pseudo = usize::from(matches!(arch.head, Head::Gaussian { .. }));
        assert_eq!(p.filter_count(), neurons + pseudo);
    }
}
