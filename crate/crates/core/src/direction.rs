//! Perturbation directions in parameter space.

use alloc::vec::Vec;

use crate::nn::ParameterVector;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    FilterNormalized,
    L2NormalizedGradient,
    Raw,
}

impl DirectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionKind::FilterNormalized => "filter_normalized",
            DirectionKind::L2NormalizedGradient => "l2_normalized_gradient",
            DirectionKind::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "filter_normalized" => Some(DirectionKind::FilterNormalized),
            "l2_normalized_gradient" => Some(DirectionKind::L2NormalizedGradient),
            "raw" => Some(DirectionKind::Raw),
            _ => None,
        }
    }
}

/// Where a direction came from, enough to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Gaussian draw from this seed.
    Seed(u64),
    /// Monte-Carlo policy gradient.
    PolicyGradient { seed: u64, env_steps: u64, gamma: f64 },
    /// Supplied from outside (e.g. loaded from a file without a record).
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub params: ParameterVector,
    pub kind: DirectionKind,
    pub provenance: Provenance,
}

/// Gaussian direction with every filter rescaled to the norm of the
/// matching filter of `theta`:
///
/// `d_ij <- d_ij / |d_ij| * |theta_ij|`
///
/// Filters where either norm is zero become zero.
pub fn sample_filter_normalized_direction(theta: &ParameterVector, seed: u64) -> Direction {
    let mut rng = Rng::new(seed);
    let mut d = theta.zeros_like();
    for v in d.values_mut() {
        *v = rng.normal();
    }
    let factors: Vec<f64> = theta
        .filter_norms()
        .iter()
        .zip(d.filter_norms())
        .map(|(target, raw)| if *target == 0.0 || raw == 0.0 { 0.0 } else { target / raw })
        .collect();
    d.scale_filters(&factors);
    Direction { params: d, kind: DirectionKind::FilterNormalized, provenance: Provenance::Seed(seed) }
}

/// `v / |v|` over all blocks.
pub fn l2_normalize(v: &ParameterVector, provenance: Provenance) -> Result<Direction> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let mut d = v.clone();
    d.scale(1.0 / norm);
    Ok(Direction { params: d, kind: DirectionKind::L2NormalizedGradient, provenance })
}

/// `theta + alpha * d1 (+ beta * d2)`. Zero coefficients leave `theta`
/// untouched bit-for-bit.
pub fn perturb(
    theta: &ParameterVector,
    d1: &Direction,
    alpha: f64,
    d2: Option<(&Direction, f64)>,
) -> Result<ParameterVector> {
    theta.check_shape(&d1.params)?;
    let mut out = theta.clone();
    if alpha != 0.0 {
        out.axpy(alpha, &d1.params);
    }
    if let Some((d2, beta)) = d2 {
        theta.check_shape(&d2.params)?;
        if beta != 0.0 {
            out.axpy(beta, &d2.params);
        }
    }
    Ok(out)
}

/// Cosine of the angle between two directions.
pub fn cosine_similarity(a: &ParameterVector, b: &ParameterVector) -> f64 {
    a.dot(b) / (a.norm() * b.norm())
}
