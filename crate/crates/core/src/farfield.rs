//! Far-field pattern of a finite slit grating lit by an incoherent source,
//! with collapse damping, velocity averaging and detector resolution.
//!
//! With q = x2 - x2' the double integral over the grating plane becomes
//!
//!   p(x) = Re int dq G(q) D(q) sinc(k q s / 2 L1) exp(-i k q x / L2),
//!   G(q) = exp(-i kappa q^2) int du t(u) t(u - q) exp(2 i kappa q u),
//!
//! with kappa = k (1/2L1 + 1/2L2). G is exact for rectangular slits, and the
//! q integral is a single FFT whose x spacing is 2 pi L2 / (k M dq).

use crate::collapse::{check_validity, BeamGeometry, CollapseSpec, Damping, Status, ValidityCheck};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::optics::MechanicalGrating;
use crate::special::{fft_complex, sinc, FftDirection};
use crate::velocity::VelocityProfile;
use rayon::prelude::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_FFT_POINTS: usize = 4096;
pub const DEFAULT_DETECTOR_RESOLUTION: f64 = 4e-6;

/// Sampled pattern on a uniform, strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl Pattern {
    pub fn spacing(&self) -> f64 {
        if self.x.len() < 2 {
            0.0
        } else {
            self.x[1] - self.x[0]
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rescaled so that the maximum is one.
    pub fn normalized(&self) -> Pattern {
        let m = self.max();
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        Pattern {
            x: self.x.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.x.len();
        if n == 0 || x < self.x[0] || x > self.x[n - 1] {
            return 0.0;
        }
        if n == 1 {
            return self.values[0];
        }
        let h = self.spacing();
        let f = (x - self.x[0]) / h;
        let i = (f.floor() as usize).min(n - 2);
        let t = f - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// (peak - trough)/(peak + trough) for the global maximum and the first
    /// local minimum to its right.
    pub fn central_visibility(&self) -> f64 {
        let v = &self.values;
        let Some((j0, &peak)) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
            return 0.0;
        };
        let mut j = j0;
        while j + 1 < v.len() && v[j + 1] <= v[j] {
            j += 1;
        }
        let trough = v[j];
        if peak + trough == 0.0 {
            0.0
        } else {
            (peak - trough) / (peak + trough)
        }
    }
}

/// FFT size and output window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldGrid {
    /// Number of q samples; a power of two.
    pub points: usize,
    /// Half width of the q grid at the fastest velocity; defaults to N d.
    pub q_half_width: Option<f64>,
    /// Half width of the returned x window [m].
    pub x_half_width: f64,
}

impl Default for FarFieldGrid {
    fn default() -> Self {
        FarFieldGrid {
            points: DEFAULT_FFT_POINTS,
            q_half_width: None,
            x_half_width: 200e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldSetup {
    pub grating: MechanicalGrating,
    pub l1: f64,
    pub l2: f64,
    pub mass: f64,
    /// Source width s [m].
    pub source_width: f64,
    /// Detector box width [m]; 0 disables the convolution.
    pub detector_resolution: f64,
    pub velocity: VelocityProfile,
    /// Gauss-Hermite order for Gaussian profiles.
    pub velocity_nodes: usize,
    pub grid: FarFieldGrid,
}

/// exp(-i kappa q^2) int t(u) t(u - q) exp(2 i kappa q u) du for the slits.
pub fn grating_overlap(slits: &[(f64, f64)], kappa: f64, q: f64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for &(a_lo, a_hi) in slits {
        for &(b_lo, b_hi) in slits {
            let lo = a_lo.max(b_lo + q);
            let hi = a_hi.min(b_hi + q);
            if hi > lo {
                let len = hi - lo;
                s += Complex64::from_polar(len * sinc(kappa * q * len), kappa * q * (lo + hi));
            }
        }
    }
    s * Complex64::from_polar(1.0, -kappa * q * q)
}

/// Largest |q| with a non-zero overlap.
fn overlap_support(slits: &[(f64, f64)]) -> f64 {
    let lo = slits.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = slits.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

struct VelocityBlock {
    weight: f64,
    geom: BeamGeometry,
    dq: f64,
    /// G(q) sinc(k q s/2L1) on the q grid.
    base: Vec<Complex64>,
}

/// Everything that does not depend on the collapse model, so that a scan
/// only re-applies D(q).
pub struct FarFieldPrepared {
    setup: FarFieldSetup,
    dx: f64,
    blocks: Vec<VelocityBlock>,
}

impl FarFieldPrepared {
    pub fn new(setup: &FarFieldSetup) -> Result<Self> {
        setup.grating.validate()?;
        if setup.grating.slits.is_none() {
            return Err(Error::Validation("far-field pattern needs a finite slit count".into()));
        }
        let m = setup.grid.points;
        if m < 16 || !m.is_power_of_two() {
            return Err(Error::Usage(format!("FFT size {m} must be a power of two >= 16")));
        }
        if !(setup.source_width >= 0.0 && setup.detector_resolution >= 0.0) {
            return Err(Error::Validation("source width and detector resolution must be >= 0".into()));
        }
        let nodes = setup.velocity.nodes(setup.velocity_nodes)?;
        let slits = setup.grating.slit_intervals();
        let support = overlap_support(&slits);
        let n = setup.grating.slits.unwrap_or(1) as f64;
        let q_half = setup.grid.q_half_width.unwrap_or(n * setup.grating.period);
        if !(q_half > 0.0) {
            return Err(Error::Validation("q grid half width must be > 0".into()));
        }
        let v_max = nodes.iter().map(|n| n.velocity).fold(0.0, f64::max);
        let fastest = BeamGeometry::new(setup.l1, setup.l2, setup.mass, v_max)?;
        let dq0 = 2.0 * q_half / m as f64;
        let dx = 2.0 * PI * setup.l2 / (fastest.wavenumber() * m as f64 * dq0);
        if setup.grid.x_half_width > 0.25 * m as f64 * dx {
            return Err(Error::Resolution(format!(
                "x window +-{:e} m exceeds a quarter of the FFT period {:e} m; raise grid.points",
                setup.grid.x_half_width,
                m as f64 * dx
            )));
        }
        if setup.detector_resolution > 0.0 && setup.detector_resolution < dx {
            return Err(Error::Resolution(format!(
                "detector resolution {:e} m is below the grid spacing {dx:e} m",
                setup.detector_resolution
            )));
        }
        let mut blocks = Vec::with_capacity(nodes.len());
        for node in &nodes {
            let geom = fastest.with_velocity(node.velocity);
            geom.validate()?;
            let k = geom.wavenumber();
            let dq = 2.0 * PI * setup.l2 / (k * m as f64 * dx);
            if 0.5 * m as f64 * dq < support {
                return Err(Error::Resolution(format!(
                    "q grid +-{:e} m does not cover the grating overlap +-{support:e} m; the pattern would alias",
                    0.5 * m as f64 * dq
                )));
            }
            let kappa = k * (0.5 / setup.l1 + 0.5 / setup.l2);
            let src = k * setup.source_width / (2.0 * setup.l1);
            let base = (0..m)
                .map(|i| {
                    let q = (i as f64 - 0.5 * m as f64) * dq;
                    grating_overlap(&slits, kappa, q) * sinc(src * q)
                })
                .collect();
            blocks.push(VelocityBlock {
                weight: node.weight,
                geom,
                dq,
                base,
            });
        }
        Ok(FarFieldPrepared {
            setup: setup.clone(),
            dx,
            blocks,
        })
    }

    pub fn setup(&self) -> &FarFieldSetup {
        &self.setup
    }

    /// x spacing of the output grid.
    pub fn spacing(&self) -> f64 {
        self.dx
    }

    fn full_grid_single(&self, block: &VelocityBlock, spec: &CollapseSpec) -> Result<Vec<f64>> {
        let m = block.base.len();
        let spec = spec.canonical();
        let samples: Vec<Complex64> = if spec.is_quantum() {
            block
                .base
                .iter()
                .enumerate()
                .map(|(i, h)| if i % 2 == 0 { *h } else { -*h })
                .collect()
        } else {
            let damping = Damping::new(&spec, &block.geom)?;
            block
                .base
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    let q = (i as f64 - 0.5 * m as f64) * block.dq;
                    let v = h * damping.eval(q);
                    if i % 2 == 0 {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        };
        let spectrum = fft_complex(&samples, FftDirection::Forward)?;
        Ok(spectrum
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * block.dq * s.re
            })
            .collect())
    }

    /// Velocity-averaged, detector-convolved pattern on the output window.
    /// The overall scale is arbitrary but common to all models.
    pub fn pattern(&self, spec: &CollapseSpec) -> Result<Pattern> {
        let parts: Vec<Vec<f64>> = self
            .blocks
            .par_iter()
            .map(|b| self.full_grid_single(b, spec))
            .collect::<Result<_>>()?;
        // Fixed node order keeps the sum independent of scheduling.
        let mut full = vec![0.0; parts[0].len()];
        for (block, part) in self.blocks.iter().zip(&parts) {
            for (o, v) in full.iter_mut().zip(part) {
                *o += block.weight * v;
            }
        }
        let full = if self.setup.detector_resolution > 0.0 {
            box_convolve_circular(&full, self.dx, self.setup.detector_resolution)
        } else {
            full
        };
        let m = full.len();
        let mut x = Vec::new();
        let mut values = Vec::new();
        for (j, v) in full.iter().enumerate() {
            let xj = (j as f64 - 0.5 * m as f64) * self.dx;
            if xj.abs() <= self.setup.grid.x_half_width {
                x.push(xj);
                values.push(v.max(0.0));
            }
        }
        Ok(Pattern { x, values })
    }

    /// Model-validity checks at the mean velocity.
    pub fn validity(&self, spec: &CollapseSpec) -> crate::collapse::ValidityReport {
        let geom = self.blocks[0].geom.with_velocity(self.setup.velocity.mean());
        check_validity(spec, &geom, Default::default())
    }
}

/// Pattern at a single velocity with default grid and no detector blur.
pub fn pattern_single_v(
    grating: &MechanicalGrating,
    geom: &BeamGeometry,
    spec: &CollapseSpec,
    source_width: f64,
    grid: FarFieldGrid,
) -> Result<Pattern> {
    let setup = FarFieldSetup {
        grating: *grating,
        l1: geom.l1,
        l2: geom.l2,
        mass: geom.mass,
        source_width,
        detector_resolution: 0.0,
        velocity: VelocityProfile::Delta {
            velocity: geom.velocity,
        },
        velocity_nodes: 1,
        grid,
    };
    FarFieldPrepared::new(&setup)?.pattern(spec)
}

/// Integral of the unit hat function from -infinity to t.
fn hat_cdf(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t <= 0.0 {
        0.5 * (t + 1.0) * (t + 1.0)
    } else if t <= 1.0 {
        1.0 - 0.5 * (1.0 - t) * (1.0 - t)
    } else {
        1.0
    }
}

/// Weights c_k of a box of width w acting on samples that are linearly
/// interpolated between grid points; sum_k c_k = 1.
fn box_weights(dx: f64, width: f64) -> Vec<(i64, f64)> {
    let b = 0.5 * width / dx;
    let reach = b.ceil() as i64 + 1;
    (-reach..=reach)
        .map(|k| {
            let kf = k as f64;
            (k, (hat_cdf(b - kf) - hat_cdf(-b - kf)) / (2.0 * b))
        })
        .filter(|(_, c)| *c > 0.0)
        .collect()
}

fn box_convolve_circular(values: &[f64], dx: f64, width: f64) -> Vec<f64> {
    let m = values.len() as i64;
    let w = box_weights(dx, width);
    (0..m)
        .map(|j| {
            w.iter()
                .map(|&(k, c)| c * values[(j - k).rem_euclid(m) as usize])
                .sum()
        })
        .collect()
}

/// Box convolution of a pattern, treating the grid as periodic so that the
/// total is preserved.
pub fn detector_convolve(pattern: &Pattern, resolution: f64) -> Result<Pattern> {
    let dx = pattern.spacing();
    if !(resolution >= dx && dx > 0.0) {
        return Err(Error::Validation(format!(
            "resolution {resolution:e} m must be at least the grid spacing {dx:e} m"
        )));
    }
    Ok(Pattern {
        x: pattern.x.clone(),
        values: box_convolve_circular(&pattern.values, dx, resolution),
    })
}

/// Margins of the inequalities behind the one-dimensional reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaxialReport {
    pub sigma1: f64,
    /// Packet width at the grating, hbar t1/(m sigma1).
    pub sigma2: f64,
    /// Packet width at the detector, hbar (t1+t2)/(m sigma1).
    pub sigma3: f64,
    pub checks: Vec<ValidityCheck>,
}

impl ParaxialReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

/// A "<<" in the paraxial conditions counts as satisfied from this margin on.
pub const PARAXIAL_PASS_AT: f64 = 2.0;

pub fn validate_paraxial(geom: &BeamGeometry, s_x: f64, s_y: f64, sigma1: f64) -> ParaxialReport {
    let sigma2 = HBAR * geom.t1() / (geom.mass * sigma1);
    let sigma3 = HBAR * geom.total_time() / (geom.mass * sigma1);
    let mk = |condition: &str, margin: f64| ValidityCheck {
        condition: condition.to_string(),
        margin,
        status: Status::classify(margin, PARAXIAL_PASS_AT),
    };
    let checks = vec![
        mk("sigma2 << L1", geom.l1 / sigma2),
        mk("sigma3 << L2", geom.l2 / sigma3),
        mk("sigma1 << sigma2", sigma2 / sigma1),
        mk("s_x << sigma2", sigma2 / s_x),
        mk("sigma2 << s_y", s_y / sigma2),
    ];
    ParaxialReport {
        sigma1,
        sigma2,
        sigma3,
        checks,
    }
}

/// Source widths sigma1 for which every condition holds with margin >= 1:
/// hbar t1/(m s_y) <= sigma1 <= min(hbar t1/(m s_x), sqrt(hbar t1/m)).
pub fn paraxial_window(geom: &BeamGeometry, s_x: f64, s_y: f64) -> Option<(f64, f64)> {
    let a = HBAR * geom.t1() / geom.mass;
    let lo = a / s_y;
    let hi = (a / s_x).min(a.sqrt());
    (lo < hi).then_some((lo, hi))
}
