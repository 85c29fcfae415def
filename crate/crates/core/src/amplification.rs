//! Center-of-mass collapse rate of a rigid planar molecule from the
//! single-nucleon rate: Adler's interpolation, a homogeneous thin disk and an
//! explicit square lattice.

use crate::collapse::{CcslParams, CollapseSpec, CslParams, DcslBoostedParams, DcslParams, DpParams, QmuplParams};
use crate::constants::{AMU, G_NEWTON, HBAR, LENGTH_FLOOR, M0};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Areal density of single-layer graphene [atoms/m^2].
pub const GRAPHENE_AREAL_DENSITY: f64 = 3.82e19;
/// Carbon atomic mass [kg].
pub const GRAPHENE_ATOMIC_MASS: f64 = 12.0 * AMU;
pub const DEFAULT_ATOMIC_RADIUS: f64 = 1e-10;
pub const DEFAULT_LATTICE_CONSTANT: f64 = 1e-10;
/// Largest lattice handled by the explicit pair sum.
pub const DEFAULT_SITE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeModel {
    pub n_atoms: f64,
    /// Mean atomic mass m_a [kg].
    pub atomic_mass: f64,
    /// Atomic radius r_a [m].
    pub atomic_radius: f64,
    /// Disk radius r_s [m].
    pub disk_radius: f64,
    /// Lattice constant a [m].
    pub lattice_constant: f64,
    /// Disk thickness [m]; only the d -> 0 limit is implemented.
    pub thickness: f64,
}

/// Disk radius when n atoms of radius r_a tile the disk: r_a sqrt(n).
pub fn packing_disk_radius(n_atoms: f64, atomic_radius: f64) -> f64 {
    atomic_radius * n_atoms.sqrt()
}

impl MoleculeModel {
    /// Planar molecule with default radii and the area-packing disk radius.
    pub fn planar(n_atoms: f64, atomic_mass: f64) -> Self {
        MoleculeModel {
            n_atoms,
            atomic_mass,
            atomic_radius: DEFAULT_ATOMIC_RADIUS,
            disk_radius: packing_disk_radius(n_atoms, DEFAULT_ATOMIC_RADIUS),
            lattice_constant: DEFAULT_LATTICE_CONSTANT,
            thickness: 0.0,
        }
    }

    /// Single-layer graphene disk of the given radius.
    pub fn graphene_disk(radius: f64) -> Self {
        MoleculeModel {
            n_atoms: GRAPHENE_AREAL_DENSITY * PI * radius * radius,
            atomic_mass: GRAPHENE_ATOMIC_MASS,
            atomic_radius: DEFAULT_ATOMIC_RADIUS,
            disk_radius: radius,
            lattice_constant: DEFAULT_LATTICE_CONSTANT,
            thickness: 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.n_atoms * self.atomic_mass
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_atoms >= 1.0 && self.n_atoms.is_finite()) {
            return Err(Error::Validation(format!(
                "molecule needs n_atoms >= 1, got {}",
                self.n_atoms
            )));
        }
        for (name, v) in [
            ("atomic_mass", self.atomic_mass),
            ("atomic_radius", self.atomic_radius),
            ("disk_radius", self.disk_radius),
            ("lattice_constant", self.lattice_constant),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("molecule {name} must be > 0, got {v}")));
            }
        }
        if !(self.thickness >= 0.0) {
            return Err(Error::Validation("molecule thickness must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_floor(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= LENGTH_FLOOR {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} = {v:e} m is below the {LENGTH_FLOOR:e} m floor"
        )))
    }
}

/// Number of atoms inside a circle of radius r_C in Adler's counting.
pub fn adler_cluster_size(mol: &MoleculeModel, r_c: f64) -> f64 {
    if r_c < mol.atomic_radius {
        1.0
    } else if r_c <= mol.disk_radius {
        (r_c * r_c / (mol.atomic_radius * mol.atomic_radius)).clamp(1.0, mol.n_atoms)
    } else {
        mol.n_atoms
    }
}

/// Lambda = (n_a / n(r_C)) (m_a n(r_C) / m0)^2 lambda.
pub fn lambda_adler(mol: &MoleculeModel, lambda0: f64, r_c: f64) -> Result<f64> {
    check_floor("r_C", r_c)?;
    let n = adler_cluster_size(mol, r_c);
    let ratio = mol.atomic_mass / M0;
    Ok(mol.n_atoms * n * ratio * ratio * lambda0)
}

/// Homogeneous thin disk: Lambda = 4 lambda m^2 r_C^2 (1 - exp(-r_s^2/4r_C^2)) / (m0^2 r_s^2).
pub fn lambda_disk(mol: &MoleculeModel, lambda0: f64, r_c: f64) -> f64 {
    let m = mol.total_mass() / M0;
    let u = mol.disk_radius * mol.disk_radius / (4.0 * r_c * r_c);
    // (1 - e^{-u})/u, with the u -> 0 limit handled by expm1.
    let shape = if u == 0.0 { 1.0 } else { -(-u).exp_m1() / u };
    lambda0 * m * m * shape
}

/// Sites (n_x, n_y) of a square lattice with spacing a inside a circle of
/// radius R: n_x in [-floor(R/a), floor(R/a)], |n_y| <= floor(sqrt(R^2/a^2 - n_x^2)).
pub fn lattice_sites(radius: f64, a: f64) -> Vec<(i64, i64)> {
    let r = radius / a;
    let n_max = r.floor() as i64;
    let mut out = Vec::new();
    for nx in -n_max..=n_max {
        let w = (r * r - (nx * nx) as f64).max(0.0).sqrt().floor() as i64;
        for ny in -w..=w {
            out.push((nx, ny));
        }
    }
    out
}

/// Radius of the lattice disk holding `n_atoms` sites of area a^2 each.
pub fn lattice_radius(mol: &MoleculeModel) -> f64 {
    mol.lattice_constant * (mol.n_atoms / PI).sqrt()
}

/// Pair-displacement histogram of a circular lattice disk.
///
/// Rows are integer intervals, so the number of pairs with displacement
/// (dx, dy) between two rows is an interval overlap length.
#[derive(Debug, Clone)]
pub struct LatticeHistogram {
    lattice_constant: f64,
    sites: usize,
    /// counts[dy][dx + span] for dy >= 0; negative dy mirrors positive.
    counts: Vec<Vec<u64>>,
    span: i64,
}

impl LatticeHistogram {
    pub fn new(mol: &MoleculeModel, site_cap: usize) -> Result<Self> {
        mol.validate()?;
        let a = mol.lattice_constant;
        let r = lattice_radius(mol) / a;
        let n_max = r.floor() as i64;
        let rows: Vec<(i64, i64)> = (-n_max..=n_max)
            .map(|ny| {
                let w = (r * r - (ny * ny) as f64).max(0.0).sqrt().floor() as i64;
                (ny, w)
            })
            .collect();
        let sites: usize = rows.iter().map(|&(_, w)| (2 * w + 1) as usize).sum();
        if sites > site_cap {
            return Err(Error::Resource(format!(
                "lattice has {sites} sites, above the cap of {site_cap}"
            )));
        }
        let span = 2 * n_max;
        let width = (2 * span + 1) as usize;
        let counts: Vec<Vec<u64>> = (0..=span)
            .into_par_iter()
            .map(|dy| {
                let mut row = vec![0u64; width];
                for &(y1, w1) in &rows {
                    let y2 = y1 - dy;
                    let Some(&(_, w2)) = rows.iter().find(|r| r.0 == y2) else {
                        continue;
                    };
                    // Pairs x1 in [-w1, w1], x2 in [-w2, w2] with x1 - x2 = dx.
                    for dx in -(w1 + w2)..=(w1 + w2) {
                        let lo = (-w1).max(-w2 + dx);
                        let hi = w1.min(w2 + dx);
                        if hi >= lo {
                            row[(dx + span) as usize] += (hi - lo + 1) as u64;
                        }
                    }
                }
                row
            })
            .collect();
        Ok(LatticeHistogram {
            lattice_constant: a,
            sites,
            counts,
            span,
        })
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    /// sum over ordered site pairs of exp(-a^2 |dn|^2 / 4 r_C^2).
    pub fn pair_sum(&self, r_c: f64) -> f64 {
        let c = self.lattice_constant * self.lattice_constant / (4.0 * r_c * r_c);
        let g: Vec<f64> = (0..=2 * self.span)
            .map(|i| {
                let d = (i - self.span) as f64;
                (-c * d * d).exp()
            })
            .collect();
        let rows: Vec<f64> = self
            .counts
            .par_iter()
            .enumerate()
            .map(|(dy, row)| {
                let mut s = 0.0;
                for (i, &n) in row.iter().enumerate() {
                    if n > 0 {
                        s += n as f64 * g[i];
                    }
                }
                let weight = if dy == 0 { 1.0 } else { 2.0 };
                weight * s * g[(dy as i64 + self.span) as usize]
            })
            .collect();
        rows.iter().sum()
    }
}

/// Lattice scheme: Lambda = lambda (m_a/m0)^2 sum_pairs exp(-a^2 |dn|^2/4r_C^2).
pub fn lambda_lattice(mol: &MoleculeModel, lambda0: f64, r_c: f64) -> Result<f64> {
    let h = LatticeHistogram::new(mol, DEFAULT_SITE_CAP)?;
    let ratio = mol.atomic_mass / M0;
    Ok(lambda0 * ratio * ratio * h.pair_sum(r_c))
}

/// Single-nucleon DP rate G m0^2 / (sqrt(pi) hbar R0).
pub fn dp_base_rate(r0: f64) -> Result<f64> {
    check_floor("R0", r0)?;
    Ok(G_NEWTON * M0 * M0 / (PI.sqrt() * HBAR * r0))
}

/// DP rate amplified with Adler's scheme at r_C := R0.
pub fn dp_effective_rate(mol: &MoleculeModel, r0: f64) -> Result<f64> {
    Ok(dp_base_rate(r0)? * lambda_adler(mol, 1.0, r0)?)
}

/// Model family with bare single-nucleon parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFamily {
    Csl,
    Ccsl { tau_bar: f64 },
    Dcsl { temperature: f64 },
    DcslBoosted { temperature: f64, boost: f64 },
    Qmupl,
    Dp,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Csl => "csl",
            ModelFamily::Ccsl { .. } => "ccsl",
            ModelFamily::Dcsl { .. } => "dcsl",
            ModelFamily::DcslBoosted { .. } => "dcsl-boosted",
            ModelFamily::Qmupl => "qmupl",
            ModelFamily::Dp => "dp",
        }
    }
}

/// Amplified model for a molecule. `rate` is lambda (CSL family) or eta
/// (QMUPL, amplified by m/m0); `length` is r_C or R0. The DP rate follows
/// from R0 alone and ignores `rate`.
pub fn amplify(family: ModelFamily, rate: f64, length: f64, mol: &MoleculeModel) -> Result<CollapseSpec> {
    let spec = match family {
        ModelFamily::Csl => CollapseSpec::Csl(CslParams {
            lambda_eff: lambda_adler(mol, rate, length)?,
            r_c: length,
        }),
        ModelFamily::Ccsl { tau_bar } => CollapseSpec::Ccsl(CcslParams {
            lambda_eff: lambda_adler(mol, rate, length)?,
            r_c: length,
            tau_bar,
        }),
        ModelFamily::Dcsl { temperature } => CollapseSpec::Dcsl(DcslParams {
            lambda_eff: lambda_adler(mol, rate, length)?,
            r_c: length,
            temperature,
        }),
        ModelFamily::DcslBoosted { temperature, boost } => CollapseSpec::DcslBoosted(DcslBoostedParams {
            lambda_eff: lambda_adler(mol, rate, length)?,
            r_c: length,
            temperature,
            boost,
        }),
        ModelFamily::Qmupl => CollapseSpec::Qmupl(QmuplParams {
            eta_eff: rate * mol.total_mass() / M0,
        }),
        ModelFamily::Dp => CollapseSpec::Dp(DpParams {
            r0: length,
            lambda_dp_eff: dp_effective_rate(mol, length)?,
        }),
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adler_limits() {
        let mol = MoleculeModel::planar(100.0, 12.0 * AMU);
        let lin = lambda_adler(&mol, 1.0, 1e-11).unwrap();
        assert!((lin - 100.0 * 144.0).abs() < 1e-9);
        let quad = lambda_adler(&mol, 1.0, 1e-6).unwrap();
        assert!((quad - 1e4 * 144.0).abs() < 1e-6);
        assert!(lambda_adler(&mol, 1.0, 1e-16).is_err());
        // Continuity at r_a and r_s.
        let ra = mol.atomic_radius;
        let below = lambda_adler(&mol, 1.0, ra * (1.0 - 1e-12)).unwrap();
        let at = lambda_adler(&mol, 1.0, ra).unwrap();
        assert!((below - at).abs() < 1e-6 * at);
        let rs = mol.disk_radius;
        let inside = lambda_adler(&mol, 1.0, rs).unwrap();
        let outside = lambda_adler(&mol, 1.0, rs * (1.0 + 1e-12)).unwrap();
        assert!((inside - outside).abs() < 1e-9 * outside);
    }

    #[test]
    fn adler_kink_at_million_atoms() {
        // r_s = r_C = 1e-7 at N = 1e6.
        let r_c = 1e-7;
        let rate = |n: f64| lambda_adler(&MoleculeModel::planar(n, 12.0 * AMU), 1e-16, r_c).unwrap();
        let slope = |n: f64| (rate(n * 1.1) / rate(n)).ln() / 1.1f64.ln();
        assert!((slope(1e4) - 2.0).abs() < 1e-9);
        assert!((slope(1e8) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disk_limits() {
        let mol = MoleculeModel::planar(100.0, 12.0 * AMU);
        let m2 = (mol.total_mass() / M0).powi(2);
        let rs = mol.disk_radius;
        assert!((lambda_disk(&mol, 1.0, 100.0 * rs) / m2 - 1.0).abs() < 1e-4);
        let small = 0.01 * rs;
        let expect = 4.0 * m2 * small * small / (rs * rs);
        assert!((lambda_disk(&mol, 1.0, small) / expect - 1.0).abs() < 1e-4);
    }

    #[test]
    fn lattice_single_site_and_large_rc() {
        let one = MoleculeModel {
            n_atoms: 1.0,
            ..MoleculeModel::planar(1.0, M0)
        };
        assert_eq!(lambda_lattice(&one, 2.0, 1e-9).unwrap(), 2.0);
        let mol = MoleculeModel::planar(100.0, M0);
        let h = LatticeHistogram::new(&mol, DEFAULT_SITE_CAP).unwrap();
        let n = h.site_count() as f64;
        assert_eq!(n, 97.0);
        assert!((h.pair_sum(1e3) - n * n).abs() < 1e-6);
        let tiny = h.pair_sum(1e-13);
        assert!((tiny - n).abs() < 1e-9);
    }

    #[test]
    fn lattice_cap() {
        let mol = MoleculeModel::planar(1e6, M0);
        assert!(matches!(
            LatticeHistogram::new(&mol, DEFAULT_SITE_CAP),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn site_listing_matches_histogram_count() {
        let mol = MoleculeModel::planar(500.0, M0);
        let h = LatticeHistogram::new(&mol, DEFAULT_SITE_CAP).unwrap();
        assert_eq!(
            lattice_sites(lattice_radius(&mol), mol.lattice_constant).len(),
            h.site_count()
        );
    }

    #[test]
    fn dp_rates() {
        let b15 = dp_base_rate(1e-15).unwrap();
        assert!((b15 / 1e-15 - 1.0).abs() < 0.05);
        let b7 = dp_base_rate(1e-7).unwrap();
        assert!((b7 / 1e-23 - 1.0).abs() < 0.05);
        let nucleon = MoleculeModel::planar(1.0, M0);
        assert_eq!(dp_effective_rate(&nucleon, 1e-7).unwrap(), b7);
        assert!(dp_base_rate(1e-16).is_err());
    }
}
