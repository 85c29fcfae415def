//! Kapitza-Dirac-Talbot-Lau signal: transmitted flux versus the shift of the
//! third grating, as a Fourier series whose n-th harmonic is damped by D at
//! the Talbot displacement q_n = 2 pi n L / (d k).

use crate::collapse::{BeamGeometry, CollapseSpec, Damping};
use crate::error::{Error, Result};
use crate::optics::{rect_fourier_coeff, talbot_b_factor, MechanicalGrating, OpticalGrating};
use crate::velocity::VelocityProfile;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_HARMONICS: usize = 16;
pub const MAX_HARMONICS: usize = 256;
pub const DEFAULT_SIGNAL_SAMPLES: usize = 256;
/// Harmonics below this fraction of S_0 are treated as converged.
pub const HARMONIC_TOLERANCE: f64 = 1e-10;

/// Signal over one period of the third-grating shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TalbotSignal {
    pub period: f64,
    /// S_n for n = 0..=n_max; S_{-n} = conj(S_n).
    pub harmonics: Vec<Complex64>,
    pub shifts: Vec<f64>,
    pub values: Vec<f64>,
}

impl TalbotSignal {
    pub fn from_harmonics(period: f64, harmonics: Vec<Complex64>, samples: usize) -> Self {
        let shifts: Vec<f64> = (0..samples).map(|i| period * i as f64 / samples as f64).collect();
        let mut s = TalbotSignal {
            period,
            harmonics,
            shifts: Vec::new(),
            values: Vec::new(),
        };
        s.values = shifts.iter().map(|&x| s.value_at(x)).collect();
        s.shifts = shifts;
        s
    }

    pub fn harmonic(&self, n: i64) -> Complex64 {
        match self.harmonics.get(n.unsigned_abs() as usize) {
            None => Complex64::new(0.0, 0.0),
            Some(h) if n < 0 => h.conj(),
            Some(h) => *h,
        }
    }

    /// S(x) = S_0 + 2 Re sum_{n >= 1} S_n exp(i 2 pi n x / d).
    pub fn value_at(&self, x: f64) -> f64 {
        let mut s = self.harmonics.first().map_or(0.0, |h| h.re);
        for (n, h) in self.harmonics.iter().enumerate().skip(1) {
            s += 2.0 * (h * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * x / self.period)).re;
        }
        s
    }

    /// 2 |S_1| / S_0.
    pub fn visibility(&self) -> Result<f64> {
        let s0 = self.harmonic(0).re;
        if !(s0 > 0.0) {
            return Err(Error::Numerical("degenerate Talbot signal: S_0 = 0".into()));
        }
        Ok(2.0 * self.harmonic(1).norm() / s0)
    }

    /// (max - min)/(max + min) over the samples.
    pub fn minmax_visibility(&self) -> f64 {
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi + lo == 0.0 {
            0.0
        } else {
            (hi - lo) / (hi + lo)
        }
    }

    pub fn normalized(&self) -> TalbotSignal {
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s = if hi > 0.0 { 1.0 / hi } else { 1.0 };
        TalbotSignal {
            period: self.period,
            harmonics: self.harmonics.iter().map(|h| h * s).collect(),
            shifts: self.shifts.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TalbotSetup {
    /// First and third grating (identical, periodic).
    pub mask: MechanicalGrating,
    /// Light grating as seen at `reference_velocity`.
    pub optical: OpticalGrating,
    pub reference_velocity: f64,
    /// L = L1 = L2 [m].
    pub length: f64,
    pub mass: f64,
    pub velocity: VelocityProfile,
    pub velocity_nodes: usize,
    /// Starting harmonic cutoff; doubled until converged.
    pub harmonics: usize,
    pub samples: usize,
}

/// Talbot displacement q_n = 2 pi n L / (d k).
pub fn talbot_displacement(n: i64, period: f64, geom: &BeamGeometry) -> f64 {
    2.0 * PI * n as f64 * geom.l1 / (period * geom.wavenumber())
}

/// Model-free harmonics A_n^* C_n^* B_n for n = 0..=n_max.
fn base_harmonics(
    mask: &MechanicalGrating,
    optical: &OpticalGrating,
    geom: &BeamGeometry,
    n_max: usize,
) -> Result<Vec<Complex64>> {
    (0..=n_max as i64)
        .map(|n| {
            let a = rect_fourier_coeff(mask, n);
            Ok(talbot_b_factor(optical, n, geom, crate::optics::DEFAULT_COEFF_NMAX)? * (a * a))
        })
        .collect()
}

/// Single-velocity signal with an explicit harmonic cutoff.
pub fn talbot_signal(
    mask: &MechanicalGrating,
    optical: &OpticalGrating,
    geom: &BeamGeometry,
    spec: &CollapseSpec,
    n_max: usize,
    samples: usize,
) -> Result<TalbotSignal> {
    mask.validate()?;
    if (mask.period - optical.period).abs() > 1e-12 * mask.period {
        return Err(Error::Validation(format!(
            "mask period {:e} m differs from the light grating period {:e} m",
            mask.period, optical.period
        )));
    }
    let base = base_harmonics(mask, optical, geom, n_max)?;
    check_converged(&base)?;
    let damped = apply_damping(&base, spec, geom, mask.period)?;
    Ok(TalbotSignal::from_harmonics(mask.period, damped, samples))
}

fn check_converged(h: &[Complex64]) -> Result<()> {
    let s0 = h[0].norm();
    let last = h.last().map_or(0.0, |v| v.norm());
    if h.len() > 1 && last > HARMONIC_TOLERANCE * s0 {
        return Err(Error::Numerical(format!(
            "Talbot series not converged at n_max = {}: |S_n|/S_0 = {:e}",
            h.len() - 1,
            last / s0
        )));
    }
    Ok(())
}

fn apply_damping(base: &[Complex64], spec: &CollapseSpec, geom: &BeamGeometry, period: f64) -> Result<Vec<Complex64>> {
    let spec = spec.canonical();
    if spec.is_quantum() {
        return Ok(base.to_vec());
    }
    let d = Damping::new(&spec, geom)?;
    Ok(base
        .iter()
        .enumerate()
        .map(|(n, h)| h * d.eval(talbot_displacement(n as i64, period, geom)))
        .collect())
}

struct NodeBlock {
    weight: f64,
    geom: BeamGeometry,
    base: Vec<Complex64>,
}

/// Model-independent part of a Talbot-Lau run, reused across a scan.
pub struct TalbotPrepared {
    setup: TalbotSetup,
    blocks: Vec<NodeBlock>,
    n_max: usize,
}

impl TalbotPrepared {
    pub fn new(setup: &TalbotSetup) -> Result<Self> {
        setup.mask.validate()?;
        setup.optical.validate()?;
        if !(setup.reference_velocity > 0.0 && setup.length > 0.0 && setup.mass > 0.0) {
            return Err(Error::Validation(
                "Talbot setup needs positive reference velocity, length and mass".into(),
            ));
        }
        if setup.samples < 2 {
            return Err(Error::Validation("Talbot signal needs at least 2 samples".into()));
        }
        let nodes = setup.velocity.nodes(setup.velocity_nodes)?;
        let mut n_max = setup.harmonics.max(1);
        loop {
            let blocks: Vec<NodeBlock> = nodes
                .par_iter()
                .map(|node| {
                    let geom = BeamGeometry::new(setup.length, setup.length, setup.mass, node.velocity)?;
                    let optical = setup.optical.scaled(setup.reference_velocity, node.velocity);
                    Ok(NodeBlock {
                        weight: node.weight,
                        geom,
                        base: base_harmonics(&setup.mask, &optical, &geom, n_max)?,
                    })
                })
                .collect::<Result<_>>()?;
            let converged = blocks.iter().all(|b| check_converged(&b.base).is_ok());
            if converged {
                return Ok(TalbotPrepared {
                    setup: setup.clone(),
                    blocks,
                    n_max,
                });
            }
            if n_max >= MAX_HARMONICS {
                let worst = blocks.iter().find_map(|b| check_converged(&b.base).err());
                return Err(worst.unwrap_or_else(|| Error::Numerical("Talbot series not converged".into())));
            }
            n_max = (2 * n_max).min(MAX_HARMONICS);
        }
    }

    pub fn setup(&self) -> &TalbotSetup {
        &self.setup
    }

    /// Harmonic cutoff reached by the convergence doubling.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Velocity-averaged signal for a model; harmonics average linearly.
    pub fn signal(&self, spec: &CollapseSpec) -> Result<TalbotSignal> {
        let parts: Vec<Vec<Complex64>> = self
            .blocks
            .par_iter()
            .map(|b| apply_damping(&b.base, spec, &b.geom, self.setup.mask.period))
            .collect::<Result<_>>()?;
        let mut h = vec![Complex64::new(0.0, 0.0); self.n_max + 1];
        for (b, part) in self.blocks.iter().zip(&parts) {
            for (o, v) in h.iter_mut().zip(part) {
                *o += v * b.weight;
            }
        }
        Ok(TalbotSignal::from_harmonics(self.setup.mask.period, h, self.setup.samples))
    }

    pub fn mean_geometry(&self) -> BeamGeometry {
        self.blocks[0].geom.with_velocity(self.setup.velocity.mean())
    }
}
