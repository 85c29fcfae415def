//! D-functions (grating-plane coherence damping) and F-functions (free
//! evolution kernels) of the collapse models, plus their validity checks.
//!
//! All rates carried here are already amplified for the whole molecule.

use crate::constants::{HBAR, K_B, LENGTH_FLOOR};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate, Quad};
use crate::special::{dp_bracket, one_minus_cos_ratio, one_minus_erf_ratio};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Beam geometry between source, grating and detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Source to grating distance [m].
    pub l1: f64,
    /// Grating to detector distance [m].
    pub l2: f64,
    /// Molecule mass [kg].
    pub mass: f64,
    /// Forward velocity [m/s].
    pub velocity: f64,
}

impl BeamGeometry {
    pub fn new(l1: f64, l2: f64, mass: f64, velocity: f64) -> Result<Self> {
        let g = BeamGeometry {
            l1,
            l2,
            mass,
            velocity,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l1", self.l1),
            ("l2", self.l2),
            ("mass", self.mass),
            ("velocity", self.velocity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "beam geometry {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn t1(&self) -> f64 {
        self.l1 / self.velocity
    }

    pub fn t2(&self) -> f64 {
        self.l2 / self.velocity
    }

    pub fn total_time(&self) -> f64 {
        self.t1() + self.t2()
    }

    /// de Broglie wavenumber k = m v / hbar.
    pub fn wavenumber(&self) -> f64 {
        self.mass * self.velocity / HBAR
    }

    pub fn with_velocity(&self, velocity: f64) -> Self {
        BeamGeometry { velocity, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CslParams {
    /// Amplified rate Lambda [1/s].
    pub lambda_eff: f64,
    /// Localization length r_C [m].
    pub r_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcslParams {
    pub lambda_eff: f64,
    pub r_c: f64,
    /// Noise temperature [K]; `f64::INFINITY` recovers CSL.
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcslBoostedParams {
    pub lambda_eff: f64,
    pub r_c: f64,
    pub temperature: f64,
    /// Boost velocity along the grating axis u_x [m/s].
    pub boost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcslParams {
    pub lambda_eff: f64,
    pub r_c: f64,
    /// First moment of the noise correlation function [s].
    pub tau_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmuplParams {
    /// Amplified rate eta (m/m0) [1/(s m^2)].
    pub eta_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpParams {
    /// Cutoff length R0 [m].
    pub r0: f64,
    /// Amplified rate G m0^2/(sqrt(pi) hbar R0) * amplification [1/s].
    pub lambda_dp_eff: f64,
}

/// Model selection with already-amplified parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum CollapseSpec {
    Qm,
    Csl(CslParams),
    Dcsl(DcslParams),
    DcslBoosted(DcslBoostedParams),
    Ccsl(CcslParams),
    Qmupl(QmuplParams),
    Dp(DpParams),
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_length(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_temperature(v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::Validation(format!("temperature must be > 0, got {v}")))
    }
}

impl CollapseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CollapseSpec::Qm => "qm",
            CollapseSpec::Csl(_) => "csl",
            CollapseSpec::Dcsl(_) => "dcsl",
            CollapseSpec::DcslBoosted(_) => "dcsl-boosted",
            CollapseSpec::Ccsl(_) => "ccsl",
            CollapseSpec::Qmupl(_) => "qmupl",
            CollapseSpec::Dp(_) => "dp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CollapseSpec::Qm => Ok(()),
            CollapseSpec::Csl(p) => {
                check_rate("lambda_eff", p.lambda_eff)?;
                check_length("r_c", p.r_c)
            }
            CollapseSpec::Dcsl(p) => {
                check_rate("lambda_eff", p.lambda_eff)?;
                check_length("r_c", p.r_c)?;
                check_temperature(p.temperature)
            }
            CollapseSpec::DcslBoosted(p) => {
                check_rate("lambda_eff", p.lambda_eff)?;
                check_length("r_c", p.r_c)?;
                check_temperature(p.temperature)?;
                if p.boost.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Validation("boost must be finite".into()))
                }
            }
            CollapseSpec::Ccsl(p) => {
                check_rate("lambda_eff", p.lambda_eff)?;
                check_length("r_c", p.r_c)?;
                check_rate("tau_bar", p.tau_bar)
            }
            CollapseSpec::Qmupl(p) => check_rate("eta_eff", p.eta_eff),
            CollapseSpec::Dp(p) => {
                check_length("r0", p.r0)?;
                check_rate("lambda_dp_eff", p.lambda_dp_eff)
            }
        }
    }

    /// True when every rate vanishes, i.e. the model predicts plain QM.
    pub fn is_quantum(&self) -> bool {
        match self {
            CollapseSpec::Qm => true,
            CollapseSpec::Csl(p) => p.lambda_eff == 0.0,
            CollapseSpec::Dcsl(p) => p.lambda_eff == 0.0,
            CollapseSpec::DcslBoosted(p) => p.lambda_eff == 0.0,
            CollapseSpec::Ccsl(p) => p.lambda_eff == 0.0,
            CollapseSpec::Qmupl(p) => p.eta_eff == 0.0,
            CollapseSpec::Dp(p) => p.lambda_dp_eff == 0.0,
        }
    }

    /// Zero-rate specs collapse to `Qm`; everything else is returned unchanged.
    pub fn canonical(&self) -> CollapseSpec {
        if self.is_quantum() {
            CollapseSpec::Qm
        } else {
            *self
        }
    }

    /// D(q) for this model.
    pub fn damping(&self, q: f64, geom: &BeamGeometry) -> Result<f64> {
        Ok(Damping::new(self, geom)?.eval(q))
    }
}

/// k_T = hbar^2 / (8 m r_C^2 k_B T).
pub fn k_t(mass: f64, r_c: f64, temperature: f64) -> f64 {
    if temperature.is_infinite() {
        return 0.0;
    }
    HBAR * HBAR / (8.0 * mass * r_c * r_c * K_B * temperature)
}

/// Temperature that produces a given k_T for (mass, r_C).
pub fn temperature_for_kt(kt: f64, mass: f64, r_c: f64) -> f64 {
    if kt == 0.0 {
        return f64::INFINITY;
    }
    HBAR * HBAR / (8.0 * mass * r_c * r_c * K_B * kt)
}

/// D_CSL(q) = exp[-Lambda (t1+t2) (1 - (sqrt(pi)/2) erf(x)/x)], x = q/(2 r_C).
pub fn d_csl(q: f64, p: &CslParams, geom: &BeamGeometry) -> f64 {
    (-p.lambda_eff * geom.total_time() * one_minus_erf_ratio(q / (2.0 * p.r_c))).exp()
}

/// D_cCSL is D_CSL: the colored-noise correction cancels in the pattern.
pub fn d_ccsl(q: f64, p: &CcslParams, geom: &BeamGeometry) -> f64 {
    d_csl(
        q,
        &CslParams {
            lambda_eff: p.lambda_eff,
            r_c: p.r_c,
        },
        geom,
    )
}

fn dcsl_common(q: f64, lambda: f64, r_c: f64, kt: f64, a: f64, geom: &BeamGeometry) -> f64 {
    let x = q / (2.0 * r_c * (1.0 + kt));
    let om = one_minus_cos_ratio(x, a);
    let k = geom.wavenumber();
    let mut exponent = 0.0;
    for (t, l) in [(geom.t1(), geom.l1), (geom.t2(), geom.l2)] {
        let s = (k / l * q * r_c * kt).powi(2);
        let e = (-s).exp();
        // 1 - e (1 - om) written without cancellation.
        exponent += t * (-(-s).exp_m1() + e * om);
    }
    (-lambda * exponent).exp()
}

/// D_dCSL(q) (no boost). Identical to `d_csl` when k_T = 0.
pub fn d_dcsl(q: f64, p: &DcslParams, geom: &BeamGeometry) -> f64 {
    let kt = k_t(geom.mass, p.r_c, p.temperature);
    if kt == 0.0 {
        return d_csl(
            q,
            &CslParams {
                lambda_eff: p.lambda_eff,
                r_c: p.r_c,
            },
            geom,
        );
    }
    dcsl_common(q, p.lambda_eff, p.r_c, kt, 0.0, geom)
}

/// Cosine frequency a = 2 r_C k_T m u_x / hbar of the boosted kernel.
pub fn boost_frequency(p: &DcslBoostedParams, mass: f64) -> f64 {
    let kt = k_t(mass, p.r_c, p.temperature);
    2.0 * p.r_c * kt * mass * p.boost / HBAR
}

/// D_dCSL with boost u_x along the grating axis.
pub fn d_dcsl_boosted(q: f64, p: &DcslBoostedParams, geom: &BeamGeometry) -> f64 {
    let kt = k_t(geom.mass, p.r_c, p.temperature);
    let a = boost_frequency(p, geom.mass);
    if a == 0.0 {
        return d_dcsl(
            q,
            &DcslParams {
                lambda_eff: p.lambda_eff,
                r_c: p.r_c,
                temperature: p.temperature,
            },
            geom,
        );
    }
    dcsl_common(q, p.lambda_eff, p.r_c, kt, a, geom)
}

/// D_QMUPL(q) = exp[-(eta_eff/3)(t1+t2) q^2].
pub fn d_qmupl(q: f64, p: &QmuplParams, geom: &BeamGeometry) -> f64 {
    (-p.eta_eff / 3.0 * geom.total_time() * q * q).exp()
}

/// D_DP(q) = exp[-lambda_dp (t1+t2)(1 - 2F2(1/2,1/2;3/2,3/2; -(q/2R0)^2))].
pub fn d_dp(q: f64, p: &DpParams, geom: &BeamGeometry) -> Result<f64> {
    check_dp_floor(p.r0)?;
    Ok((-p.lambda_dp_eff * geom.total_time() * dp_bracket(q / (2.0 * p.r0))).exp())
}

fn check_dp_floor(r0: f64) -> Result<()> {
    if r0 < LENGTH_FLOOR {
        Err(Error::Domain(format!(
            "R0 = {r0:e} m is below the {LENGTH_FLOOR:e} m applicability floor"
        )))
    } else {
        Ok(())
    }
}

/// A D-function with all per-geometry constants resolved, for evaluation on
/// large q-grids.
#[derive(Debug, Clone, Copy)]
pub struct Damping {
    spec: CollapseSpec,
    geom: BeamGeometry,
}

impl Damping {
    pub fn new(spec: &CollapseSpec, geom: &BeamGeometry) -> Result<Self> {
        spec.validate()?;
        geom.validate()?;
        if let CollapseSpec::Dp(p) = spec {
            check_dp_floor(p.r0)?;
        }
        let kt = match spec {
            CollapseSpec::Dcsl(p) => Some(k_t(geom.mass, p.r_c, p.temperature)),
            CollapseSpec::DcslBoosted(p) => Some(k_t(geom.mass, p.r_c, p.temperature)),
            _ => None,
        };
        if let Some(kt) = kt {
            if kt >= 0.1 {
                log::warn!("dCSL evaluated with k_T = {kt:.3e}; the small-k_T expansion needs k_T << 1");
            }
        }
        Ok(Damping {
            spec: *spec,
            geom: *geom,
        })
    }

    pub fn spec(&self) -> &CollapseSpec {
        &self.spec
    }

    pub fn eval(&self, q: f64) -> f64 {
        let g = &self.geom;
        match &self.spec {
            CollapseSpec::Qm => 1.0,
            CollapseSpec::Csl(p) => d_csl(q, p, g),
            CollapseSpec::Ccsl(p) => d_ccsl(q, p, g),
            CollapseSpec::Dcsl(p) => d_dcsl(q, p, g),
            CollapseSpec::DcslBoosted(p) => d_dcsl_boosted(q, p, g),
            CollapseSpec::Qmupl(p) => d_qmupl(q, p, g),
            CollapseSpec::Dp(p) => {
                (-p.lambda_dp_eff * g.total_time() * dp_bracket(q / (2.0 * p.r0))).exp()
            }
        }
    }
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(16))
}

/// 1 - int_0^1 exp(-(x - delta s)^2) ds, free of cancellation.
fn sheared_gaussian_deficit(x: f64, delta: f64) -> f64 {
    if delta.abs() > 2.0 {
        let mean = crate::constants::SQRT_PI_2 * (crate::special::erf(x) - crate::special::erf(x - delta)) / delta;
        return 1.0 - mean;
    }
    let nodes = gl16();
    let mut sum = 0.0;
    for half in [0.25, 0.75] {
        for (t, w) in nodes.0.iter().zip(&nodes.1) {
            let s = half + 0.25 * t;
            let y = x - delta * s;
            sum += 0.25 * w * (-(-y * y).exp_m1());
        }
    }
    sum
}

/// F_CSL(k~, q, t) = exp[-Lambda t (1 - (1/t) int_0^t exp(-(q - k~ tau/m)^2 / 4 r_C^2) d tau)].
pub fn f_csl(ktilde: f64, q: f64, t: f64, p: &CslParams, mass: f64) -> f64 {
    let x = q / (2.0 * p.r_c);
    let delta = ktilde * t / (mass * 2.0 * p.r_c);
    (-p.lambda_eff * t * sheared_gaussian_deficit(x, delta)).exp()
}

/// F_cCSL = F_CSL exp[(Lambda tau_bar/2)(exp(-(q - k~ t/m)^2/4r_C^2) - exp(-q^2/4r_C^2))].
pub fn f_ccsl(ktilde: f64, q: f64, t: f64, p: &CcslParams, mass: f64) -> f64 {
    let base = f_csl(
        ktilde,
        q,
        t,
        &CslParams {
            lambda_eff: p.lambda_eff,
            r_c: p.r_c,
        },
        mass,
    );
    base * ccsl_correction(ktilde, q, t, p, mass)
}

/// The colored-noise factor multiplying F_CSL in F_cCSL.
pub fn ccsl_correction(ktilde: f64, q: f64, t: f64, p: &CcslParams, mass: f64) -> f64 {
    let four_rc2 = 4.0 * p.r_c * p.r_c;
    let shifted = q - ktilde * t / mass;
    let bracket = (-shifted * shifted / four_rc2).exp() - (-q * q / four_rc2).exp();
    (0.5 * p.lambda_eff * p.tau_bar * bracket).exp()
}

/// Real dCSL F-function (no boost).
pub fn f_dcsl(ktilde: f64, q: f64, t: f64, p: &DcslParams, mass: f64) -> f64 {
    let kt = k_t(mass, p.r_c, p.temperature);
    let rc_eff = p.r_c * (1.0 + kt);
    let s = (ktilde * p.r_c * kt / HBAR).powi(2);
    let e = (-s).exp();
    let deficit = sheared_gaussian_deficit(q / (2.0 * rc_eff), ktilde * t / (mass * 2.0 * rc_eff));
    (-p.lambda_eff * t * (-(-s).exp_m1() + e * deficit)).exp()
}

/// Boosted dCSL F-function; complex because of the boost phase.
pub fn f_dcsl_boosted(
    ktilde: f64,
    q: f64,
    t: f64,
    p: &DcslBoostedParams,
    mass: f64,
) -> Result<Complex64> {
    let kt = k_t(mass, p.r_c, p.temperature);
    let rc_eff = p.r_c * (1.0 + kt);
    let beta = 2.0 * kt * mass * p.boost / (HBAR * (1.0 + kt));
    let e = (-(ktilde * p.r_c * kt / HBAR).powi(2)).exp();
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let v = ktilde / mass;
    let integrand = |tau: f64| {
        let y = q - v * tau;
        Complex64::from_polar((-y * y / (4.0 * rc_eff * rc_eff)).exp(), beta * y)
    };
    let quad: Quad<Complex64> = integrate(integrand, 0.0, t, 1e-13 * t, 1e-13).map_err(|err| {
        Error::Numerical(format!("f_dcsl_boosted(k~={ktilde:e}, q={q:e}, t={t:e}): {err}"))
    })?;
    let mean = quad.value / t;
    Ok((-p.lambda_eff * t * (Complex64::new(1.0, 0.0) - e * mean)).exp())
}

/// F_DP(k~, q, t) = exp[-(1/hbar) int_0^t (U(q - k~ tau/m) - U(0)) d tau].
pub fn f_dp(ktilde: f64, q: f64, t: f64, p: &DpParams, mass: f64) -> Result<f64> {
    check_dp_floor(p.r0)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let v = ktilde / mass;
    let integrand = |tau: f64| one_minus_erf_ratio((q - v * tau) / (2.0 * p.r0));
    let quad = integrate(integrand, 0.0, t, 1e-12 * t, 1e-13).map_err(|err| {
        Error::Numerical(format!("f_dp(k~={ktilde:e}, q={q:e}, t={t:e}): {err}"))
    })?;
    Ok((-p.lambda_dp_eff * quad.value).exp())
}

/// F_QMUPL(k~, q, t) = exp[-eta_eff t (q^2 - q k~ t/m + k~^2 t^2 / (3 m^2))].
pub fn f_qmupl(ktilde: f64, q: f64, t: f64, p: &QmuplParams, mass: f64) -> f64 {
    let v = ktilde / mass;
    (-p.eta_eff * t * (q * q - q * v * t + v * v * t * t / 3.0)).exp()
}

/// Outcome of a single validity condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Marginal,
    Fail,
}

impl Status {
    /// Pass at `margin >= pass_at`, marginal between 1 and `pass_at`, fail below 1.
    pub fn classify(margin: f64, pass_at: f64) -> Status {
        if margin >= pass_at {
            Status::Pass
        } else if margin >= 1.0 {
            Status::Marginal
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub condition: String,
    /// Ratio (large side)/(small side) of the inequality.
    pub margin: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub model: String,
    pub checks: Vec<ValidityCheck>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

/// Limits on superposition size and duration used by the dCSL conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityLimits {
    pub dx_max: f64,
    pub t_max: f64,
}

impl Default for ValidityLimits {
    fn default() -> Self {
        ValidityLimits {
            dx_max: 1e-5,
            t_max: 1e-2,
        }
    }
}

/// A "much greater than" is read as a factor of ten.
pub const MUCH_GREATER: f64 = 10.0;
/// Largest colored-noise first moment for which the white-noise pattern holds [s].
pub const CCSL_TAU_MAX: f64 = 1e-13;

fn check(condition: String, margin: f64, pass_at: f64) -> ValidityCheck {
    ValidityCheck {
        condition,
        margin,
        status: Status::classify(margin, pass_at),
    }
}

/// Checks the regime conditions of the model for a given beam geometry.
pub fn check_validity(
    spec: &CollapseSpec,
    geom: &BeamGeometry,
    limits: ValidityLimits,
) -> ValidityReport {
    let mut checks = Vec::new();
    let thermal = |r_c: f64, temperature: f64, checks: &mut Vec<ValidityCheck>, boost: Option<f64>| {
        let kt = k_t(geom.mass, r_c, temperature);
        checks.push(check(format!("k_T << 1 (k_T = {kt:.3e})"), 1.0 / kt, MUCH_GREATER));
        let scale = HBAR * limits.dx_max / (8.0 * K_B * temperature);
        for (label, t) in [("t1", geom.t1()), ("t2", geom.t2())] {
            let t = t.min(limits.t_max);
            checks.push(check(
                format!("r_C {label} >> hbar dx/(8 k_B T)"),
                r_c * t / scale,
                MUCH_GREATER,
            ));
        }
        if let Some(u) = boost {
            checks.push(check(
                "r_C^2/u_x >> hbar dx/(8 k_B T)".into(),
                r_c * r_c / u.abs() / scale,
                MUCH_GREATER,
            ));
        }
    };
    match spec {
        CollapseSpec::Dcsl(p) => thermal(p.r_c, p.temperature, &mut checks, None),
        CollapseSpec::DcslBoosted(p) => thermal(p.r_c, p.temperature, &mut checks, Some(p.boost)),
        CollapseSpec::Ccsl(p) => checks.push(check(
            format!("tau_bar <= {CCSL_TAU_MAX:e} s"),
            CCSL_TAU_MAX / p.tau_bar,
            1.0,
        )),
        CollapseSpec::Dp(p) => checks.push(check(
            format!("R0 >= {LENGTH_FLOOR:e} m"),
            p.r0 / LENGTH_FLOOR,
            1.0,
        )),
        _ => {}
    }
    ValidityReport {
        model: spec.name().to_string(),
        checks,
    }
}
