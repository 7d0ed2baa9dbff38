mod common;

use common::*;
use rsurf_core::direction::{
    cosine_similarity, l2_normalize, perturb, sample_filter_normalized_direction, Direction, DirectionKind, Provenance,
};
use rsurf_core::env::{EnvName, EnvSpec};
use rsurf_core::nn::{Architecture, ParameterVector};
use rsurf_core::rng::Rng;
use rsurf_core::Error;

/// Norm of every filter recomputed from the raw blocks: row j of each
/// weight matrix together with bias j, then the whole log-std vector.
fn filter_norms(p: &ParameterVector) -> Vec<f64> {
    let mut out = Vec::new();
    for layer in &p.layers {
        for j in 0..layer.out {
            let row = &layer.weight[j * layer.inp..(j + 1) * layer.inp];
            let sq: f64 = row.iter().map(|w| w * w).sum::<f64>() + layer.bias[j] * layer.bias[j];
            out.push(sq.sqrt());
        }
    }
    if !p.log_std.is_empty() {
        out.push(p.log_std.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    out
}

fn three_architectures() -> Vec<Architecture> {
    let mut split = Architecture::with_hidden(&EnvSpec::of(EnvName::Acrobot), vec![32, 32]);
    split.shared_trunk = false;
    let mut shared = Architecture::with_hidden(&EnvSpec::of(EnvName::CartPole), vec![64, 64]);
    shared.shared_trunk = true;
    let gaussian = Architecture::with_hidden(&EnvSpec::of(EnvName::Pendulum), vec![16, 16, 16]);
    vec![split, shared, gaussian]
}

#[test]
fn filter_norms_match_theta() {
    let mut rng = Rng::new(1);
    let archs = three_architectures();
    for k in 0..50 {
        let arch = &archs[k % 3];
        let theta = random_params(arch, rng.uniform_range(0.1, 3.0), &mut rng);
        let d = sample_filter_normalized_direction(&theta, rng.next_u64());
        assert_eq!(d.kind, DirectionKind::FilterNormalized);
        for (a, b) in filter_norms(&d.params).iter().zip(filter_norms(&theta)) {
            assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
        }
    }
}

#[test]
fn zero_filters_stay_zero() {
    let arch = &three_architectures()[2];
    let mut theta = random_params(arch, 1.0, &mut Rng::new(2));
    let layer = &mut theta.layers[1];
    let inp = layer.inp;
    layer.weight[..inp].iter_mut().for_each(|w| *w = 0.0);
    layer.bias[0] = 0.0;
    theta.log_std.iter_mut().for_each(|v| *v = 0.0);
    let d = sample_filter_normalized_direction(&theta, 5);
    assert!(d.params.layers[1].weight[..inp].iter().all(|w| *w == 0.0));
    assert_eq!(d.params.layers[1].bias[0], 0.0);
    assert!(d.params.log_std.iter().all(|v| *v == 0.0));
}

#[test]
fn random_directions_are_nearly_orthogonal() {
    let arch = Architecture::with_hidden(&EnvSpec::of(EnvName::CartPole), vec![96, 96]);
    let theta = random_params(&arch, 1.0, &mut Rng::new(3));
    assert!(theta.len() >= 10_000, "{}", theta.len());
    let mut cos: Vec<f64> = (0..100)
        .map(|k| {
            let a = sample_filter_normalized_direction(&theta, 2 * k);
            let b = sample_filter_normalized_direction(&theta, 2 * k + 1);
            cosine_similarity(&a.params, &b.params).abs()
        })
        .collect();
    cos.sort_by(f64::total_cmp);
    let median = (cos[49] + cos[50]) / 2.0;
    assert!(median < 0.05, "{median}");
}

#[test]
fn scale_equivariance() {
    let arch = &three_architectures()[0];
    let theta = random_params(arch, 1.0, &mut Rng::new(4));
    for c in [0.5, 2.0, 37.0] {
        let mut scaled = theta.clone();
        scaled.scale(c);
        let a = sample_filter_normalized_direction(&scaled, 9);
        let b = sample_filter_normalized_direction(&theta, 9);
        for (x, y) in a.params.values().zip(b.params.values()) {
            assert!((x - c * y).abs() <= 1e-12 * (c * y).abs().max(1e-300), "{x} vs {}", c * y);
        }
    }
}

/// Double-double accumulation of the squared norm.
fn extended_norm(p: &ParameterVector) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for v in p.values() {
        let sq = v * v;
        let sq_err = v.mul_add(*v, -sq);
        let s = hi + sq;
        let bp = s - hi;
        let err = (hi - (s - bp)) + (sq - bp);
        hi = s;
        lo += err + sq_err;
    }
    (hi + lo).sqrt()
}

#[test]
fn l2_normalize_matches_extended_precision_oracle() {
    let mut rng = Rng::new(5);
    for arch in three_architectures() {
        let v = random_params(&arch, rng.uniform_range(1e-3, 1e3), &mut rng);
        let d = l2_normalize(&v, Provenance::External).unwrap();
        assert_eq!(d.kind, DirectionKind::L2NormalizedGradient);
        let n = extended_norm(&v);
        for (x, y) in d.params.values().zip(v.values()) {
            assert!((x - y / n).abs() <= 1e-12 * (y / n).abs().max(1e-300));
        }
        assert!((d.params.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn l2_normalize_examples() {
    let arch = &three_architectures()[1];
    let mut v = ParameterVector::zeros(arch);
    v.layers[0].weight[0] = 2.0;
    let d = l2_normalize(&v, Provenance::External).unwrap();
    assert_eq!(d.params.layers[0].weight[0], 1.0);
    assert_eq!(d.params.norm(), 1.0);
    let again = l2_normalize(&d.params, Provenance::External).unwrap();
    assert_eq!(again.params, d.params);
    assert!(matches!(l2_normalize(&ParameterVector::zeros(arch), Provenance::External), Err(Error::ZeroNorm)));
}

fn raw(params: ParameterVector) -> Direction {
    Direction { params, kind: DirectionKind::Raw, provenance: Provenance::External }
}

#[test]
fn perturb_matches_elementwise_oracle() {
    let mut rng = Rng::new(6);
    for arch in three_architectures() {
        let theta = random_params(&arch, 1.0, &mut rng);
        let d1 = raw(random_params(&arch, 1.0, &mut rng));
        let d2 = raw(random_params(&arch, 1.0, &mut rng));
        let (alpha, beta) = (rng.normal(), rng.normal());
        let before = theta.clone();
        let p = perturb(&theta, &d1, alpha, Some((&d2, beta))).unwrap();
        assert_eq!(theta, before);
        let want: Vec<f64> = theta
            .values()
            .zip(d1.params.values())
            .zip(d2.params.values())
            .map(|((t, a), b)| t + alpha * a + beta * b)
            .collect();
        for (x, y) in p.values().zip(&want) {
            assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
    }
}

#[test]
fn perturb_identities() {
    let arch = &three_architectures()[2];
    let theta = random_params(arch, 1.0, &mut Rng::new(7));
    let d = sample_filter_normalized_direction(&theta, 1);
    let same = perturb(&theta, &d, 0.0, Some((&d, 0.0))).unwrap();
    assert!(same.values().zip(theta.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let mut neg = theta.clone();
    neg.scale(-1.0);
    let zero = perturb(&theta, &raw(neg), 1.0, None).unwrap();
    assert!(zero.values().all(|v| *v == 0.0));
    let other = ParameterVector::zeros(&three_architectures()[0]);
    assert!(perturb(&theta, &raw(other), 1.0, None).is_err());
}
