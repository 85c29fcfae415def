//! Mechanical slit gratings and the Kapitza-Dirac standing-light-wave
//! grating, with the Fourier data the near-field series needs.

use crate::collapse::BeamGeometry;
use crate::constants::{C_LIGHT, EPSILON_0, H_PLANCK};
use crate::error::{Error, Result};
use crate::special::{bessel_i_sequence, sinc, ComplexSample};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Slit grating. `slits = None` stands for the infinite periodic grating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalGrating {
    pub period: f64,
    pub slit_width: f64,
    /// Slit width reduced by the van der Waals interaction with the walls.
    pub effective_slit_width: f64,
    pub slits: Option<u32>,
}

impl MechanicalGrating {
    pub fn validate(&self) -> Result<()> {
        let (d, l, le) = (self.period, self.slit_width, self.effective_slit_width);
        if !(d.is_finite() && le > 0.0 && le <= l && l < d) {
            return Err(Error::Validation(format!(
                "grating needs 0 < l_eff <= l < d, got l_eff={le:e}, l={l:e}, d={d:e}"
            )));
        }
        if self.slits == Some(0) {
            return Err(Error::Validation("grating needs at least one slit".into()));
        }
        Ok(())
    }

    /// Open intervals [lo, hi] of a finite grating, centered on x = 0.
    pub fn slit_intervals(&self) -> Vec<(f64, f64)> {
        let n = self.slits.unwrap_or(1);
        let half = 0.5 * self.effective_slit_width;
        (0..n)
            .map(|j| {
                let c = (j as f64 - 0.5 * (n as f64 - 1.0)) * self.period;
                (c - half, c + half)
            })
            .collect()
    }

    /// 1 inside a slit, 0 elsewhere.
    pub fn transmission(&self, x: f64) -> f64 {
        let d = self.period;
        let half = 0.5 * self.effective_slit_width;
        match self.slits {
            None => {
                let r = x - d * (x / d).round();
                if r.abs() < half {
                    1.0
                } else {
                    0.0
                }
            }
            Some(n) => {
                let offset = 0.5 * (n as f64 - 1.0);
                let j = (x / d + offset).round();
                if j < 0.0 || j > n as f64 - 1.0 {
                    return 0.0;
                }
                let c = (j - offset) * d;
                if (x - c).abs() < half {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fourier coefficient of exp(i 2 pi n x/d) for the periodic slit intensity:
/// (l/d) sinc(pi n l/d), with l the effective slit width.
pub fn rect_fourier_coeff(g: &MechanicalGrating, n: i64) -> f64 {
    let duty = g.effective_slit_width / g.period;
    duty * sinc(PI * n as f64 * duty)
}

/// Laser parameters from which the standing-wave grating strength follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserGrating {
    pub wavelength: f64,
    pub power: f64,
    /// Optical polarizability in SI units [C m^2/V].
    pub polarizability: f64,
    pub absorption_cross_section: f64,
    /// Vertical beam waist [m].
    pub waist_y: f64,
}

impl LaserGrating {
    /// Eikonal phase at the antinodes:
    /// phi0 = 4 sqrt(2 pi) alpha P / (h c eps0 w_y v).
    pub fn phase(&self, velocity: f64) -> f64 {
        4.0 * (2.0 * PI).sqrt() * self.polarizability * self.power
            / (H_PLANCK * C_LIGHT * EPSILON_0 * self.waist_y * velocity)
    }

    /// Mean number of absorbed photons at the antinodes:
    /// n0 = 8 sigma lambda P / (sqrt(2 pi) h c w_y v).
    pub fn absorption(&self, velocity: f64) -> f64 {
        8.0 * self.absorption_cross_section * self.wavelength * self.power
            / ((2.0 * PI).sqrt() * H_PLANCK * C_LIGHT * self.waist_y * velocity)
    }

    pub fn grating(&self, velocity: f64) -> OpticalGrating {
        OpticalGrating {
            period: 0.5 * self.wavelength,
            phi0: self.phase(velocity),
            n0: self.absorption(velocity),
        }
    }
}

/// Standing-wave grating t(x) = exp[beta cos^2(pi x/d)], beta = i phi0 - n0/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalGrating {
    pub period: f64,
    pub phi0: f64,
    pub n0: f64,
}

impl OpticalGrating {
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Validation(format!("optical grating period must be > 0, got {}", self.period)));
        }
        if !(self.n0 >= 0.0 && self.n0.is_finite() && self.phi0.is_finite()) {
            return Err(Error::Validation(format!(
                "optical grating needs finite phi0 and n0 >= 0, got phi0={}, n0={}",
                self.phi0, self.n0
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> Complex64 {
        Complex64::new(-0.5 * self.n0, self.phi0)
    }

    /// Amplitude transmission at x.
    pub fn transmission(&self, x: f64) -> Complex64 {
        let c = (PI * x / self.period).cos();
        (self.beta() * c * c).exp()
    }

    /// Same grating seen by molecules moving at `velocity` instead of `reference`.
    pub fn scaled(&self, reference: f64, velocity: f64) -> OpticalGrating {
        let s = reference / velocity;
        OpticalGrating {
            period: self.period,
            phi0: self.phi0 * s,
            n0: self.n0 * s,
        }
    }
}

/// Coefficients c_n for |n| <= n_max; zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    n_max: usize,
    values: Vec<ComplexSample>,
}

impl FourierCoefficients {
    pub fn from_fn(n_max: usize, f: impl Fn(i64) -> ComplexSample) -> Self {
        let m = n_max as i64;
        FourierCoefficients {
            n_max,
            values: (-m..=m).map(f).collect(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, n: i64) -> ComplexSample {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(n + self.n_max as i64) as usize]
        }
    }

    /// sum_n c_n exp(i 2 pi n x / d).
    pub fn resum(&self, x: f64, period: f64) -> ComplexSample {
        let m = self.n_max as i64;
        (-m..=m)
            .map(|n| self.get(n) * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * x / period))
            .sum()
    }
}

/// b_j = e^{beta/2} I_j(beta/2) for |j| <= n_max.
pub fn kdtl_fourier_coeffs(g: &OpticalGrating, n_max: usize) -> Result<FourierCoefficients> {
    g.validate()?;
    let half = 0.5 * g.beta();
    let seq = bessel_i_sequence(n_max, half)?;
    let pre = half.exp();
    Ok(FourierCoefficients::from_fn(n_max, |j| pre * seq[j.unsigned_abs() as usize]))
}

/// Single coefficient b_j.
pub fn kdtl_fourier_coeff(g: &OpticalGrating, j: i64) -> Result<ComplexSample> {
    Ok(kdtl_fourier_coeffs(g, j.unsigned_abs() as usize)?.get(j))
}

/// Default coefficient cutoff before convergence doubling.
pub const DEFAULT_COEFF_NMAX: usize = 32;
/// Largest cutoff tried by the doubling loop.
pub const MAX_COEFF_NMAX: usize = 1024;

/// B_n = sum_j b_j b*_{j-n} exp(i pi^2 L (n^2 - 2 n j)/(d^2 k)) at a fixed cutoff.
pub fn talbot_b_factor_truncated(
    b: &FourierCoefficients,
    n: i64,
    period: f64,
    talbot_length: f64,
    wavenumber: f64,
) -> ComplexSample {
    let m = b.n_max() as i64;
    let c = PI * PI * talbot_length / (period * period * wavenumber);
    let lo = (-m).max(n - m);
    let hi = m.min(n + m);
    let mut s = Complex64::new(0.0, 0.0);
    for j in lo..=hi {
        let nf = n as f64;
        let phase = c * (nf * nf - 2.0 * nf * j as f64);
        s += b.get(j) * b.get(j - n).conj() * Complex64::from_polar(1.0, phase);
    }
    s
}

/// B_n with the coefficient cutoff doubled from `n_max` until the change is
/// below 1e-8 in absolute value (B_0 <= 1 sets the scale).
pub fn talbot_b_factor(g: &OpticalGrating, n: i64, geom: &BeamGeometry, n_max: usize) -> Result<ComplexSample> {
    if geom.l1 != geom.l2 {
        return Err(Error::Validation("Talbot-Lau setup needs L1 = L2".into()));
    }
    let k = geom.wavenumber();
    let mut cut = n_max.max(n.unsigned_abs() as usize).max(1);
    let mut prev = talbot_b_factor_truncated(&kdtl_fourier_coeffs(g, cut)?, n, g.period, geom.l1, k);
    while cut < MAX_COEFF_NMAX {
        cut *= 2;
        let next = talbot_b_factor_truncated(&kdtl_fourier_coeffs(g, cut)?, n, g.period, geom.l1, k);
        if (next - prev).norm() < 1e-8 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numerical(format!(
        "B_{n} not converged at coefficient cutoff {MAX_COEFF_NMAX}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::AMU;

    fn far_grating() -> MechanicalGrating {
        MechanicalGrating {
            period: 100e-9,
            slit_width: 79e-9,
            effective_slit_width: 43e-9,
            slits: Some(31),
        }
    }

    #[test]
    fn transmission_support() {
        let g = far_grating();
        assert_eq!(g.transmission(0.0), 1.0);
        assert_eq!(g.transmission(50e-9), 0.0);
        assert_eq!(g.transmission(15.0 * 100e-9), 1.0);
        assert_eq!(g.transmission(16.0 * 100e-9), 0.0);
        let even = MechanicalGrating {
            slits: Some(2),
            ..g
        };
        assert_eq!(even.transmission(0.0), 0.0);
        assert_eq!(even.transmission(50e-9), 1.0);
        let periodic = MechanicalGrating { slits: None, ..g };
        assert_eq!(periodic.transmission(1e-3), 1.0);
        assert!(MechanicalGrating {
            effective_slit_width: 90e-9,
            ..g
        }
        .validate()
        .is_err());
    }

    #[test]
    fn rect_coefficients() {
        let g = MechanicalGrating {
            period: 100e-9,
            slit_width: 50e-9,
            effective_slit_width: 50e-9,
            slits: None,
        };
        assert_eq!(rect_fourier_coeff(&g, 0), 0.5);
        assert!(rect_fourier_coeff(&g, 2).abs() < 1e-16);
        assert_eq!(rect_fourier_coeff(&g, 3), rect_fourier_coeff(&g, -3));
    }

    #[test]
    fn identity_optical_grating() {
        let g = OpticalGrating {
            period: 266e-9,
            phi0: 0.0,
            n0: 0.0,
        };
        let b = kdtl_fourier_coeffs(&g, 8).unwrap();
        assert_eq!(b.get(0), Complex64::new(1.0, 0.0));
        assert_eq!(b.get(3), Complex64::new(0.0, 0.0));
        let geom = BeamGeometry::new(0.105, 0.105, 10_000.0 * AMU, 85.0).unwrap();
        let b1 = talbot_b_factor(&g, 1, &geom, 16).unwrap();
        assert!(b1.norm() < 1e-15);
        let b0 = talbot_b_factor(&g, 0, &geom, 16).unwrap();
        assert!((b0 - 1.0).norm() < 1e-15);
    }

    #[test]
    fn energy_inequality() {
        let lossless = OpticalGrating {
            period: 266e-9,
            phi0: 3.0,
            n0: 0.0,
        };
        let b = kdtl_fourier_coeffs(&lossless, 40).unwrap();
        let e: f64 = (-40..=40).map(|j| b.get(j).norm_sqr()).sum();
        assert!((e - 1.0).abs() < 1e-13, "{e}");
        let lossy = OpticalGrating { n0: 0.4, ..lossless };
        let b = kdtl_fourier_coeffs(&lossy, 40).unwrap();
        let e: f64 = (-40..=40).map(|j| b.get(j).norm_sqr()).sum();
        assert!(e < 1.0);
    }

    #[test]
    fn laser_helper_magnitudes() {
        let laser = LaserGrating {
            wavelength: 532e-9,
            power: 1.0,
            polarizability: 410e-30 * 4.0 * PI * EPSILON_0,
            absorption_cross_section: 1.7e-21,
            waist_y: 900e-6,
        };
        let g = laser.grating(85.0);
        assert_eq!(g.period, 266e-9);
        assert!((g.phi0 - 3.40).abs() < 0.02, "{}", g.phi0);
        assert!((g.n0 - 0.19).abs() < 0.01, "{}", g.n0);
        let slow = g.scaled(85.0, 42.5);
        assert!((slow.phi0 - 2.0 * g.phi0).abs() < 1e-12);
    }
}
