//! Longitudinal velocity distributions of the molecular beam, reduced to
//! weighted quadrature nodes.

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;
use serde::{Deserialize, Serialize};

/// FWHM = 2 sqrt(2 ln 2) sigma.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

pub const DEFAULT_VELOCITY_NODES: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityProfile {
    /// A single velocity.
    Delta { velocity: f64 },
    Gaussian { mean: f64, fwhm: f64 },
    /// Weights are normalized on use and integrated with the trapezoid rule.
    Tabulated { velocities: Vec<f64>, weights: Vec<f64> },
}

/// Quadrature node (velocity, normalized weight).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityNode {
    pub velocity: f64,
    pub weight: f64,
}

impl VelocityProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            VelocityProfile::Delta { velocity } => {
                if !(velocity.is_finite() && *velocity > 0.0) {
                    return Err(Error::Validation(format!("velocity must be > 0, got {velocity}")));
                }
            }
            VelocityProfile::Gaussian { mean, fwhm } => {
                if !(mean.is_finite() && *mean > 0.0 && fwhm.is_finite() && *fwhm >= 0.0) {
                    return Err(Error::Validation(format!(
                        "Gaussian profile needs mean > 0 and fwhm >= 0, got {mean}, {fwhm}"
                    )));
                }
            }
            VelocityProfile::Tabulated { velocities, weights } => {
                if velocities.is_empty() || velocities.len() != weights.len() {
                    return Err(Error::Validation(
                        "tabulated profile needs equally many velocities and weights".into(),
                    ));
                }
                if velocities.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Validation("tabulated velocities must increase strictly".into()));
                }
                if velocities.iter().any(|v| !(*v > 0.0 && v.is_finite()))
                    || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
                {
                    return Err(Error::Validation(
                        "tabulated profile needs positive velocities and non-negative weights".into(),
                    ));
                }
                if weights.iter().all(|w| *w == 0.0) {
                    return Err(Error::Validation("tabulated weights are all zero".into()));
                }
            }
        }
        Ok(())
    }

    /// Representative velocity (mean of the profile).
    pub fn mean(&self) -> f64 {
        match self {
            VelocityProfile::Delta { velocity } => *velocity,
            VelocityProfile::Gaussian { mean, .. } => *mean,
            VelocityProfile::Tabulated { .. } => {
                let nodes = self.nodes(0).unwrap_or_default();
                nodes.iter().map(|n| n.velocity * n.weight).sum()
            }
        }
    }

    /// Normalized nodes. `n` is the Gauss-Hermite order for Gaussian
    /// profiles (0 selects the default); nodes at v <= 0 are dropped.
    pub fn nodes(&self, n: usize) -> Result<Vec<VelocityNode>> {
        self.validate()?;
        let raw: Vec<VelocityNode> = match self {
            VelocityProfile::Delta { velocity } => vec![VelocityNode {
                velocity: *velocity,
                weight: 1.0,
            }],
            VelocityProfile::Gaussian { mean, fwhm } => {
                if *fwhm == 0.0 {
                    vec![VelocityNode {
                        velocity: *mean,
                        weight: 1.0,
                    }]
                } else {
                    let n = if n == 0 { DEFAULT_VELOCITY_NODES } else { n };
                    let sigma = fwhm / FWHM_PER_SIGMA;
                    let (x, w) = gauss_hermite(n);
                    x.iter()
                        .zip(&w)
                        .map(|(x, w)| VelocityNode {
                            velocity: mean + std::f64::consts::SQRT_2 * sigma * x,
                            weight: *w,
                        })
                        .collect()
                }
            }
            VelocityProfile::Tabulated { velocities, weights } => {
                let m = velocities.len();
                if m == 1 {
                    vec![VelocityNode {
                        velocity: velocities[0],
                        weight: 1.0,
                    }]
                } else {
                    (0..m)
                        .map(|i| {
                            let left = if i > 0 { velocities[i] - velocities[i - 1] } else { 0.0 };
                            let right = if i + 1 < m { velocities[i + 1] - velocities[i] } else { 0.0 };
                            VelocityNode {
                                velocity: velocities[i],
                                weight: 0.5 * (left + right) * weights[i],
                            }
                        })
                        .collect()
                }
            }
        };
        let kept: Vec<VelocityNode> = raw
            .into_iter()
            .filter(|n| n.velocity > 0.0 && n.weight > 0.0)
            .collect();
        let total: f64 = kept.iter().map(|n| n.weight).sum();
        if kept.is_empty() || !(total > 0.0) {
            return Err(Error::Validation("velocity profile has no weight at v > 0".into()));
        }
        Ok(kept
            .into_iter()
            .map(|n| VelocityNode {
                velocity: n.velocity,
                weight: n.weight / total,
            })
            .collect())
    }
}

/// Weighted sum of per-node samples, evaluated in parallel and reduced in
/// node order so the result does not depend on thread scheduling.
pub fn average_over<F>(nodes: &[VelocityNode], f: F) -> Result<Vec<f64>>
where
    F: Fn(&VelocityNode) -> Result<Vec<f64>> + Sync,
{
    use rayon::prelude::*;
    let parts: Vec<Vec<f64>> = nodes.par_iter().map(&f).collect::<Result<_>>()?;
    let len = parts.first().map_or(0, Vec::len);
    if parts.iter().any(|p| p.len() != len) {
        return Err(Error::Numerical("velocity nodes produced grids of different length".into()));
    }
    let mut out = vec![0.0; len];
    for (node, part) in nodes.iter().zip(&parts) {
        for (o, v) in out.iter_mut().zip(part) {
            *o += node.weight * v;
        }
    }
    Ok(out)
}
