//! Macroscopic localization requirement: a superposition of a graphene disk
//! over the eye's resolution r must lose coherence below exp(-1) within the
//! eye's response time t. Free evolution is neglected.

use crate::amplification::{amplify, lambda_adler, MoleculeModel, ModelFamily};
use crate::collapse::{k_t, CollapseSpec};
#[cfg(test)]
use crate::collapse::CslParams;
use crate::constants::{HBAR, M0};
use crate::error::{Error, Result};
use crate::special::dp_bracket;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// exp(-1); the choice of threshold is a convention.
pub const THRESHOLD_LOCALIZATION: f64 = 0.367_879_441_171_442_33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationScenario {
    /// Superposition distance r [m].
    pub separation: f64,
    /// Time t [s].
    pub time: f64,
    /// Graphene disk radius; defaults to the separation.
    pub disk_radius: Option<f64>,
    /// Width of each Gaussian branch for the dCSL evaluation [m].
    pub sigma: f64,
    pub threshold: f64,
}

impl Default for LocalizationScenario {
    fn default() -> Self {
        LocalizationScenario {
            separation: 1e-5,
            time: 1e-2,
            disk_radius: None,
            sigma: 1e-5,
            threshold: THRESHOLD_LOCALIZATION,
        }
    }
}

impl LocalizationScenario {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("separation", self.separation),
            ("time", self.time),
            ("sigma", self.sigma),
            ("disk_radius", self.disk_radius.unwrap_or(1.0)),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("scenario {name} must be > 0, got {v}")));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Validation("localization threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn molecule(&self) -> MoleculeModel {
        MoleculeModel::graphene_disk(self.disk_radius.unwrap_or(self.separation))
    }
}

/// Amplified model for the scenario's disk; see [`amplify`].
pub fn amplified_spec(family: ModelFamily, rate: f64, length: f64, sc: &LocalizationScenario) -> Result<CollapseSpec> {
    amplify(family, rate, length, &sc.molecule())
}

/// |rho(x, x', t) / rho(x, x', 0)| for x - x' = r along one axis.
pub fn decay_ratio(spec: &CollapseSpec, sc: &LocalizationScenario) -> Result<f64> {
    sc.validate()?;
    spec.validate()?;
    let (r, t) = (sc.separation, sc.time);
    Ok(match spec {
        CollapseSpec::Qm => 1.0,
        CollapseSpec::Csl(p) => csl_ratio(p.lambda_eff, p.r_c, r, t),
        CollapseSpec::Ccsl(p) => csl_ratio(p.lambda_eff, p.r_c, r, t),
        CollapseSpec::Qmupl(p) => (-p.eta_eff * t * r * r).exp(),
        CollapseSpec::Dp(p) => {
            if p.r0 < crate::constants::LENGTH_FLOOR {
                return Err(Error::Domain(format!("R0 = {:e} m is below the floor", p.r0)));
            }
            (-p.lambda_dp_eff * t * dp_bracket(r / (2.0 * p.r0))).exp()
        }
        CollapseSpec::Dcsl(_) | CollapseSpec::DcslBoosted(_) => decay_ratio_dcsl_numeric(spec, sc)?,
    })
}

fn csl_ratio(lambda_eff: f64, r_c: f64, r: f64, t: f64) -> f64 {
    let x = r * r / (4.0 * r_c * r_c);
    (lambda_eff * t * (-x).exp_m1()).exp()
}

/// Largest number of Poisson terms summed one by one.
const MAX_EXACT_TERMS: f64 = 4.0e6;

/// dCSL decay for the two-Gaussian state psi ~ [g(x - r/2) + g(x + r/2)] g(y) g(z).
///
/// Expanding exp(Lambda t Phi) in powers of Phi, the n-th power turns the
/// k~ integral into a Gaussian smoothing of variance s_n^2 = 2 n r_C^2 k_T^2
/// in every direction, which acts on the Gaussian initial state in closed
/// form. The Poisson series is then summed in log space.
pub fn decay_ratio_dcsl_numeric(spec: &CollapseSpec, sc: &LocalizationScenario) -> Result<f64> {
    sc.validate()?;
    let (lambda_eff, r_c, temperature, boost) = match spec {
        CollapseSpec::Dcsl(p) => (p.lambda_eff, p.r_c, p.temperature, 0.0),
        CollapseSpec::DcslBoosted(p) => (p.lambda_eff, p.r_c, p.temperature, p.boost),
        _ => return Err(Error::Usage(format!("dCSL decay requested for {}", spec.name()))),
    };
    let mass = sc.molecule().total_mass();
    let kt = k_t(mass, r_c, temperature);
    let (r, t, sigma) = (sc.separation, sc.time, sc.sigma);
    let lt = lambda_eff * t;
    if lt == 0.0 {
        return Ok(1.0);
    }
    let e = (-r * r / (4.0 * r_c * r_c * (1.0 + kt) * (1.0 + kt))).exp();
    // |ratio| <= exp(-Lambda t (1 - E)) since smoothing only lowers the overlap.
    let bound_exponent = lt * -(-r * r / (4.0 * r_c * r_c * (1.0 + kt) * (1.0 + kt))).exp_m1();
    if bound_exponent > 740.0 {
        return Ok(0.0);
    }
    let theta = 2.0 * kt * mass * boost * r / (HBAR * (1.0 + kt));
    let s2 = sigma * sigma;
    let overlap0 = 1.0 + (-r * r / (2.0 * s2)).exp() + 2.0 * (-r * r / (4.0 * s2)).exp();
    // ln of the smoothed overlap relative to the unsmoothed one.
    let log_smooth = |n: f64| -> f64 {
        let var = 2.0 * n * r_c * r_c * kt * kt;
        let total = s2 + var;
        let x = (s2 / total).sqrt()
            * (1.0
                + (-r * r / (2.0 * s2)).exp()
                + 2.0 * (-r * r / (8.0 * s2)).exp() * (-r * r / (8.0 * total)).exp());
        let yz = s2 / total;
        (x / overlap0).ln() + yz.ln()
    };
    let mu = lt * e;
    if mu == 0.0 {
        return Ok((-lt).exp());
    }
    let log_mu = mu.ln();
    let spread = 12.0 * mu.sqrt() + 20.0;
    let lo = (mu - spread).floor().max(0.0);
    let hi = (mu + spread).ceil();
    let step = ((hi - lo) / MAX_EXACT_TERMS).ceil().max(1.0);
    if step > 1.0 && boost != 0.0 && theta * step > 0.1 {
        return Err(Error::Numerical(format!(
            "boosted dCSL series too wide: {} terms with phase step {:e}",
            hi - lo,
            theta
        )));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = lo;
    while n <= hi {
        let log_term = -lt + n * log_mu - libm::lgamma(n + 1.0) + log_smooth(n);
        sum += Complex64::from_polar(log_term.exp() * step, theta * n);
        n += step;
    }
    let ratio = sum.norm();
    if !ratio.is_finite() {
        return Err(Error::Numerical(format!(
            "dCSL series non-finite for Lambda t = {lt:e}, mu = {mu:e}"
        )));
    }
    Ok(ratio.min(1.0))
}

/// One point of a localization boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// r_C, or R0 for DP; NaN for QMUPL.
    pub length: f64,
    /// Smallest bare rate (lambda or eta) meeting the requirement; None for DP.
    pub min_rate: Option<f64>,
    /// Decay ratio of the DP model at this R0.
    pub ratio: Option<f64>,
    /// Whether the DP model meets the requirement at this R0.
    pub localizes: Option<bool>,
}

/// Closed-form CSL boundary: lambda_min = 1/(amp t (1 - exp(-r^2/4r_C^2))).
pub fn csl_min_lambda(r_c: f64, sc: &LocalizationScenario) -> Result<f64> {
    let amp = lambda_adler(&sc.molecule(), 1.0, r_c)?;
    let x = sc.separation * sc.separation / (4.0 * r_c * r_c);
    Ok(-sc.threshold.ln() / (amp * sc.time * -(-x).exp_m1()))
}

/// Smallest lambda with dCSL ratio below threshold, by bisection in ln lambda.
pub fn dcsl_min_lambda(family: ModelFamily, r_c: f64, sc: &LocalizationScenario) -> Result<f64> {
    let below = |lambda: f64| -> Result<bool> {
        Ok(decay_ratio(&amplified_spec(family, lambda, r_c, sc)?, sc)? < sc.threshold)
    };
    let start = csl_min_lambda(r_c, sc)?;
    let (mut lo, mut hi) = (start, start);
    let mut tries = 0;
    while !below(hi)? {
        lo = hi;
        hi *= 10.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Numerical(format!("no dCSL localization up to lambda = {hi:e}")));
        }
    }
    while below(lo)? {
        hi = lo;
        lo /= 10.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Numerical("dCSL localizes at vanishing lambda".into()));
        }
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-10 {
            break;
        }
    }
    Ok(hi)
}

/// Boundary over a grid of r_C (or R0). QMUPL ignores the grid and returns
/// its single eta bound.
pub fn localization_bound(family: ModelFamily, sc: &LocalizationScenario, grid: &[f64]) -> Result<Vec<BoundaryPoint>> {
    sc.validate()?;
    match family {
        ModelFamily::Qmupl => {
            let m = sc.molecule().total_mass();
            let eta = -sc.threshold.ln() * M0 / (m * sc.time * sc.separation * sc.separation);
            Ok(vec![BoundaryPoint {
                length: f64::NAN,
                min_rate: Some(eta),
                ratio: None,
                localizes: None,
            }])
        }
        _ => grid
            .par_iter()
            .map(|&length| -> Result<BoundaryPoint> {
                Ok(match family {
                    ModelFamily::Dp => {
                        let ratio = decay_ratio(&amplified_spec(family, 0.0, length, sc)?, sc)?;
                        BoundaryPoint {
                            length,
                            min_rate: None,
                            ratio: Some(ratio),
                            localizes: Some(ratio < sc.threshold),
                        }
                    }
                    ModelFamily::Csl | ModelFamily::Ccsl { .. } => BoundaryPoint {
                        length,
                        min_rate: Some(csl_min_lambda(length, sc)?),
                        ratio: None,
                        localizes: None,
                    },
                    _ => BoundaryPoint {
                        length,
                        min_rate: Some(dcsl_min_lambda(family, length, sc)?),
                        ratio: None,
                        localizes: None,
                    },
                })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn zero_time_is_one() {
        let sc = LocalizationScenario {
            time: 1e-300,
            ..Default::default()
        };
        let spec = amplified_spec(ModelFamily::Csl, 1e-16, 1e-7, &sc).unwrap();
        assert!((decay_ratio(&spec, &sc).unwrap() - 1.0).abs() < 1e-250);
    }

    #[test]
    fn csl_far_limit() {
        let sc = LocalizationScenario::default();
        let spec = CollapseSpec::Csl(CslParams {
            lambda_eff: 100.0,
            r_c: 1e-9,
        });
        assert!((decay_ratio(&spec, &sc).unwrap() - 1.0 / E).abs() < 1e-15);
    }

    #[test]
    fn grw_point_near_border() {
        let sc = LocalizationScenario::default();
        let lam = csl_min_lambda(1e-7, &sc).unwrap();
        assert!(lam > 1e-17 && lam < 1e-15, "{lam:e}");
    }

    #[test]
    fn dcsl_zero_kt_matches_csl() {
        let sc = LocalizationScenario::default();
        for (lam, rc) in [(1e-16, 1e-7), (1e-15, 1e-6), (1e-17, 1e-5)] {
            let csl = decay_ratio(&amplified_spec(ModelFamily::Csl, lam, rc, &sc).unwrap(), &sc).unwrap();
            let d = decay_ratio(
                &amplified_spec(ModelFamily::Dcsl { temperature: f64::INFINITY }, lam, rc, &sc).unwrap(),
                &sc,
            )
            .unwrap();
            assert!((d - csl).abs() < 1e-6 * csl.max(1e-300), "{d} {csl}");
        }
    }

    #[test]
    fn dp_never_localizes() {
        let sc = LocalizationScenario::default();
        let grid: Vec<f64> = (0..12).map(|i| 10f64.powi(-15 + i)).collect();
        let pts = localization_bound(ModelFamily::Dp, &sc, &grid).unwrap();
        assert!(pts.iter().all(|p| p.localizes == Some(false)));
    }
}
