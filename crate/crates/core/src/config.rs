//! Run configuration: TOML schema, experiment presets, override merging and
//! the config hash embedded in every output.
//!
//! A config file picks a preset and overrides any subset of its keys:
//!
//! ```toml
//! preset = "kdtl-2013"
//! seed = 7
//!
//! [model]
//! family = "csl"
//! lambda_per_s = 1e-6
//! r_c_m = 1e-7
//! ```
//!
//! Physical quantities are SI with the unit in the key name.

use crate::amplification::{amplify, ModelFamily, MoleculeModel, DEFAULT_ATOMIC_RADIUS, DEFAULT_LATTICE_CONSTANT};
use crate::collapse::{BeamGeometry, CollapseSpec};
use crate::constants::{AMU, EPSILON_0};
use crate::error::{Error, Result};
use crate::farfield::{FarFieldGrid, FarFieldSetup};
use crate::fitkit::{DataKind, FitOptions, DEFAULT_DELTA_CHI2, DEFAULT_ERROR_SCALE};
use crate::localization::{LocalizationScenario, THRESHOLD_LOCALIZATION};
use crate::nearfield::TalbotSetup;
use crate::optics::{LaserGrating, MechanicalGrating, OpticalGrating};
use crate::velocity::VelocityProfile;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[serde(rename = "farfield-2012")]
    Farfield2012,
    #[serde(rename = "kdtl-2013")]
    Kdtl2013,
    Custom,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Preset> {
        match s {
            "farfield-2012" => Ok(Preset::Farfield2012),
            "kdtl-2013" => Ok(Preset::Kdtl2013),
            "custom" => Ok(Preset::Custom),
            _ => Err(Error::Usage(format!(
                "unknown preset `{s}` (expected farfield-2012, kdtl-2013 or custom)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Farfield2012 => "farfield-2012",
            Preset::Kdtl2013 => "kdtl-2013",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Qm,
    Csl,
    Ccsl,
    Dcsl,
    DcslBoosted,
    Qmupl,
    Dp,
}

impl ModelName {
    pub fn parse(s: &str) -> Result<ModelName> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::Usage(format!("unknown model `{s}` (expected qm, csl, ccsl, dcsl, dcsl-boosted, qmupl or dp)")))
    }
}

/// Model section. Only the keys relevant to `family` are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: ModelName,
    /// Single-nucleon CSL rate.
    #[serde(default)]
    pub lambda_per_s: Option<f64>,
    #[serde(default)]
    pub r_c_m: Option<f64>,
    /// QMUPL single-nucleon rate.
    #[serde(default)]
    pub eta_per_m2_s: Option<f64>,
    /// DP cutoff.
    #[serde(default)]
    pub r0_m: Option<f64>,
    #[serde(default)]
    pub tau_bar_s: Option<f64>,
    #[serde(default)]
    pub temperature_k: Option<f64>,
    #[serde(default)]
    pub boost: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: ModelName::Qm,
            lambda_per_s: None,
            r_c_m: None,
            eta_per_m2_s: None,
            r0_m: None,
            tau_bar_s: None,
            temperature_k: None,
            boost: None,
        }
    }
}

fn need(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config {
        path: format!("model.{key}"),
        msg: "required by the selected model family".into(),
    })
}

impl ModelConfig {
    /// Family without parameters; `None` for quantum mechanics.
    pub fn family(&self) -> Result<Option<ModelFamily>> {
        Ok(Some(match self.family {
            ModelName::Qm => return Ok(None),
            ModelName::Csl => ModelFamily::Csl,
            ModelName::Ccsl => ModelFamily::Ccsl {
                tau_bar: need(self.tau_bar_s, "tau_bar_s")?,
            },
            ModelName::Dcsl => ModelFamily::Dcsl {
                temperature: need(self.temperature_k, "temperature_k")?,
            },
            ModelName::DcslBoosted => ModelFamily::DcslBoosted {
                temperature: need(self.temperature_k, "temperature_k")?,
                boost: need(self.boost, "boost")?,
            },
            ModelName::Qmupl => ModelFamily::Qmupl,
            ModelName::Dp => ModelFamily::Dp,
        }))
    }

    /// (rate, length) point of the family: (lambda, r_C), (eta, -) or (-, R0).
    pub fn point(&self) -> Result<(f64, f64)> {
        match self.family {
            ModelName::Qm => Ok((0.0, 1.0)),
            ModelName::Qmupl => Ok((need(self.eta_per_m2_s, "eta_per_m2_s")?, 1.0)),
            ModelName::Dp => Ok((0.0, need(self.r0_m, "r0_m")?)),
            _ => Ok((need(self.lambda_per_s, "lambda_per_s")?, need(self.r_c_m, "r_c_m")?)),
        }
    }

    /// Amplified spec for a molecule, canonicalized (zero rate is QM).
    pub fn spec(&self, mol: &MoleculeModel) -> Result<CollapseSpec> {
        match self.family()? {
            None => Ok(CollapseSpec::Qm),
            Some(f) => {
                let (rate, length) = self.point()?;
                Ok(amplify(f, rate, length, mol)?.canonical())
            }
        }
    }

    /// Applies the common command-line overrides.
    pub fn apply_overrides(&mut self, model: Option<ModelName>, rate: Option<f64>, length: Option<f64>) {
        if let Some(m) = model {
            self.family = m;
        }
        if let Some(r) = rate {
            match self.family {
                ModelName::Qmupl => self.eta_per_m2_s = Some(r),
                _ => self.lambda_per_s = Some(r),
            }
        }
        if let Some(l) = length {
            match self.family {
                ModelName::Dp => self.r0_m = Some(l),
                _ => self.r_c_m = Some(l),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeConfig {
    pub n_atoms: f64,
    pub mass_kg: f64,
    #[serde(default = "default_atomic_radius")]
    pub atomic_radius_m: f64,
    #[serde(default = "default_lattice_constant")]
    pub lattice_constant_m: f64,
    /// Defaults to the area-packing radius r_a sqrt(N).
    #[serde(default)]
    pub disk_radius_m: Option<f64>,
}

fn default_atomic_radius() -> f64 {
    DEFAULT_ATOMIC_RADIUS
}

fn default_lattice_constant() -> f64 {
    DEFAULT_LATTICE_CONSTANT
}

impl MoleculeConfig {
    pub fn model(&self) -> Result<MoleculeModel> {
        let mut m = MoleculeModel::planar(self.n_atoms, self.mass_kg / self.n_atoms);
        m.atomic_radius = self.atomic_radius_m;
        m.lattice_constant = self.lattice_constant_m;
        m.disk_radius = self
            .disk_radius_m
            .unwrap_or_else(|| crate::amplification::packing_disk_radius(self.n_atoms, self.atomic_radius_m));
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityConfig {
    Delta { velocity_m_per_s: f64 },
    Gaussian { mean_m_per_s: f64, fwhm_m_per_s: f64 },
    Tabulated { velocities_m_per_s: Vec<f64>, weights: Vec<f64> },
}

impl VelocityConfig {
    pub fn profile(&self) -> VelocityProfile {
        match self {
            VelocityConfig::Delta { velocity_m_per_s } => VelocityProfile::Delta {
                velocity: *velocity_m_per_s,
            },
            VelocityConfig::Gaussian { mean_m_per_s, fwhm_m_per_s } => VelocityProfile::Gaussian {
                mean: *mean_m_per_s,
                fwhm: *fwhm_m_per_s,
            },
            VelocityConfig::Tabulated {
                velocities_m_per_s,
                weights,
            } => VelocityProfile::Tabulated {
                velocities: velocities_m_per_s.clone(),
                weights: weights.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldConfig {
    pub period_m: f64,
    pub slit_width_m: f64,
    pub effective_slit_width_m: f64,
    pub slits: u32,
    pub l1_m: f64,
    pub l2_m: f64,
    pub source_width_m: f64,
    pub detector_resolution_m: f64,
    pub velocity: VelocityConfig,
    pub velocity_nodes: usize,
    pub fft_points: usize,
    #[serde(default)]
    pub q_half_width_m: Option<f64>,
    pub x_half_width_m: f64,
    /// Transverse extents of the source used by the paraxial check.
    pub source_x_m: f64,
    pub source_y_m: f64,
    /// Initial packet width sigma1 checked by `validate`.
    pub sigma1_m: f64,
}

impl FarFieldConfig {
    pub fn setup(&self, mass: f64) -> FarFieldSetup {
        FarFieldSetup {
            grating: MechanicalGrating {
                period: self.period_m,
                slit_width: self.slit_width_m,
                effective_slit_width: self.effective_slit_width_m,
                slits: Some(self.slits),
            },
            l1: self.l1_m,
            l2: self.l2_m,
            mass,
            source_width: self.source_width_m,
            detector_resolution: self.detector_resolution_m,
            velocity: self.velocity.profile(),
            velocity_nodes: self.velocity_nodes,
            grid: FarFieldGrid {
                points: self.fft_points,
                q_half_width: self.q_half_width_m,
                x_half_width: self.x_half_width_m,
            },
        }
    }
}

/// Laser inputs of the optional (phi0, n0) helper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    pub wavelength_m: f64,
    pub power_w: f64,
    /// Polarizability volume alpha/(4 pi eps0).
    pub polarizability_volume_m3: f64,
    pub absorption_cross_section_m2: f64,
    pub waist_y_m: f64,
}

impl LaserConfig {
    pub fn laser(&self) -> LaserGrating {
        LaserGrating {
            wavelength: self.wavelength_m,
            power: self.power_w,
            polarizability: 4.0 * std::f64::consts::PI * EPSILON_0 * self.polarizability_volume_m3,
            absorption_cross_section: self.absorption_cross_section_m2,
            waist_y: self.waist_y_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearFieldConfig {
    pub period_m: f64,
    pub slit_width_m: f64,
    pub length_m: f64,
    pub reference_velocity_m_per_s: f64,
    /// Grating strength at the reference velocity; takes precedence over `laser`.
    #[serde(default)]
    pub phi0: Option<f64>,
    #[serde(default)]
    pub n0: Option<f64>,
    #[serde(default)]
    pub laser: Option<LaserConfig>,
    pub velocity: VelocityConfig,
    pub velocity_nodes: usize,
    pub harmonics: usize,
    pub samples: usize,
}

impl NearFieldConfig {
    pub fn optical(&self) -> Result<OpticalGrating> {
        match (self.phi0, self.n0, &self.laser) {
            (Some(phi0), Some(n0), _) => Ok(OpticalGrating {
                period: self.period_m,
                phi0,
                n0,
            }),
            (None, None, Some(l)) => {
                let g = l.laser().grating(self.reference_velocity_m_per_s);
                if (g.period - self.period_m).abs() > 1e-9 * self.period_m {
                    return Err(Error::Config {
                        path: "nearfield.laser.wavelength_m".into(),
                        msg: format!("half wavelength {:e} m must equal period_m {:e} m", g.period, self.period_m),
                    });
                }
                Ok(OpticalGrating {
                    period: self.period_m,
                    ..g
                })
            }
            _ => Err(Error::Config {
                path: "nearfield".into(),
                msg: "give both phi0 and n0, or a [nearfield.laser] table".into(),
            }),
        }
    }

    pub fn setup(&self, mass: f64) -> Result<TalbotSetup> {
        Ok(TalbotSetup {
            mask: MechanicalGrating {
                period: self.period_m,
                slit_width: self.slit_width_m,
                effective_slit_width: self.slit_width_m,
                slits: None,
            },
            optical: self.optical()?,
            reference_velocity: self.reference_velocity_m_per_s,
            length: self.length_m,
            mass,
            velocity: self.velocity.profile(),
            velocity_nodes: self.velocity_nodes,
            harmonics: self.harmonics,
            samples: self.samples,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Rate axis: lambda [1/s], or eta [1/(m^2 s)] for QMUPL.
    pub rate_min: f64,
    pub rate_max: f64,
    pub rate_points: usize,
    /// Length axis: r_C, or R0 for DP.
    pub length_min_m: f64,
    pub length_max_m: f64,
    pub length_points: usize,
    pub delta_chi2: f64,
    pub refinements: usize,
    pub error_scale: f64,
    pub background: bool,
    pub max_shift_m: f64,
    pub shift_steps: usize,
    /// Dataset to fit; the command line `--data` wins.
    #[serde(default)]
    pub data: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            rate_min: 1e-9,
            rate_max: 1e-2,
            rate_points: 8,
            length_min_m: 1e-11,
            length_max_m: 1e-4,
            length_points: 8,
            delta_chi2: DEFAULT_DELTA_CHI2,
            refinements: crate::fitkit::BOUNDARY_REFINEMENTS,
            error_scale: DEFAULT_ERROR_SCALE,
            background: true,
            max_shift_m: 0.0,
            shift_steps: 0,
            data: None,
        }
    }
}

impl ScanConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            background: self.background,
            max_shift: self.max_shift_m,
            shift_steps: self.shift_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeConfig {
    pub separation_m: f64,
    pub time_s: f64,
    #[serde(default)]
    pub disk_radius_m: Option<f64>,
    pub sigma_m: f64,
    pub threshold: f64,
    pub length_min_m: f64,
    pub length_max_m: f64,
    pub length_points: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        LocalizeConfig {
            separation_m: 1e-5,
            time_s: 1e-2,
            disk_radius_m: None,
            sigma_m: 1e-5,
            threshold: THRESHOLD_LOCALIZATION,
            length_min_m: 1e-11,
            length_max_m: 1e-4,
            length_points: 29,
        }
    }
}

impl LocalizeConfig {
    pub fn scenario(&self) -> LocalizationScenario {
        LocalizationScenario {
            separation: self.separation_m,
            time: self.time_s,
            disk_radius: self.disk_radius_m,
            sigma: self.sigma_m,
            threshold: self.threshold,
        }
    }
}

/// Design of the seeded synthetic datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub points: usize,
    pub peak_counts: f64,
    pub error_scale: f64,
    /// Position range; defaults to +-150 um (far field) or three periods
    /// of the grating shift (near field).
    #[serde(default)]
    pub x_min_m: Option<f64>,
    #[serde(default)]
    pub x_max_m: Option<f64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            points: 201,
            peak_counts: 2000.0,
            error_scale: DEFAULT_ERROR_SCALE,
            x_min_m: None,
            x_max_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelConfig,
    pub molecule: MoleculeConfig,
    #[serde(default)]
    pub farfield: Option<FarFieldConfig>,
    #[serde(default)]
    pub nearfield: Option<NearFieldConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub localize: LocalizeConfig,
    #[serde(default)]
    pub synthetic: SyntheticConfig,
}

/// The configured experiment.
pub enum ExperimentSetup {
    Far(FarFieldSetup),
    Near(TalbotSetup),
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Value {
        match preset {
            Preset::Farfield2012 => serde_json::to_value(farfield_2012()).expect("preset serializes"),
            Preset::Kdtl2013 => serde_json::to_value(kdtl_2013()).expect("preset serializes"),
            Preset::Custom => serde_json::json!({ "preset": "custom" }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.farfield, &self.nearfield) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(Error::Config {
                    path: "farfield/nearfield".into(),
                    msg: "exactly one experiment section is required".into(),
                })
            }
        }
        self.molecule.model()?;
        // The (rate, length) point is checked by the commands that use it.
        self.model.family()?;
        if let Some(n) = &self.nearfield {
            n.optical()?;
        }
        let s = &self.scan;
        if s.rate_points < 2 || s.length_points < 1 || !(s.rate_min > 0.0 && s.rate_max > s.rate_min) {
            return Err(Error::Config {
                path: "scan".into(),
                msg: "need rate_points >= 2, length_points >= 1 and 0 < rate_min < rate_max".into(),
            });
        }
        if self.synthetic.points < 2 {
            return Err(Error::Config {
                path: "synthetic.points".into(),
                msg: "at least 2 points".into(),
            });
        }
        Ok(())
    }

    pub fn molecule_model(&self) -> Result<MoleculeModel> {
        self.molecule.model()
    }

    pub fn experiment(&self) -> Result<ExperimentSetup> {
        let mass = self.molecule.mass_kg;
        match (&self.farfield, &self.nearfield) {
            (Some(f), None) => Ok(ExperimentSetup::Far(f.setup(mass))),
            (None, Some(n)) => Ok(ExperimentSetup::Near(n.setup(mass)?)),
            _ => Err(Error::Config {
                path: "farfield/nearfield".into(),
                msg: "exactly one experiment section is required".into(),
            }),
        }
    }

    pub fn data_kind(&self) -> DataKind {
        if self.farfield.is_some() {
            DataKind::Farfield
        } else {
            DataKind::Nearfield
        }
    }

    /// Positions of the synthetic dataset.
    pub fn synthetic_positions(&self) -> Vec<f64> {
        let (lo, hi) = match (&self.farfield, &self.nearfield) {
            (_, Some(n)) => (0.0, 3.0 * n.period_m),
            _ => (-150e-6, 150e-6),
        };
        let lo = self.synthetic.x_min_m.unwrap_or(lo);
        let hi = self.synthetic.x_max_m.unwrap_or(hi);
        let n = self.synthetic.points;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Beam geometry at the mean velocity.
    pub fn mean_geometry(&self) -> Result<BeamGeometry> {
        let mass = self.molecule.mass_kg;
        match (&self.farfield, &self.nearfield) {
            (Some(f), _) => BeamGeometry::new(f.l1_m, f.l2_m, mass, f.velocity.profile().mean()),
            (_, Some(n)) => BeamGeometry::new(n.length_m, n.length_m, mass, n.velocity.profile().mean()),
            _ => Err(Error::Config {
                path: "farfield/nearfield".into(),
                msg: "no experiment section".into(),
            }),
        }
    }

    /// SHA-256 over the canonical JSON of the settings that influence a
    /// command's output. `out_dir` is excluded; with `canonical_model` the
    /// model section is replaced by the amplified canonical spec, so a zero
    /// rate hashes like quantum mechanics.
    pub fn hash(&self, canonical_model: bool) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Numerical(e.to_string()))?;
        let obj = v.as_object_mut().expect("config is an object");
        obj.remove("out_dir");
        if canonical_model {
            let spec = self.model.spec(&self.molecule_model()?)?;
            obj.insert(
                "model".into(),
                serde_json::to_value(spec).map_err(|e| Error::Numerical(e.to_string()))?,
            );
        }
        let text = serde_json::to_string(&v).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

/// Recursive merge; tables carrying a `kind` tag replace rather than merge,
/// so switching a tagged variant does not inherit stale keys.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let tagged = v.as_object().is_some_and(|m| m.contains_key("kind"));
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && !tagged => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Resolves a parsed TOML document against its preset. `preset_override`
/// replaces the `preset` key before the preset defaults are looked up.
pub fn resolve(doc: Value, preset_override: Option<Preset>) -> Result<RunConfig> {
    let mut doc = doc;
    if let Some(p) = preset_override {
        doc.as_object_mut()
            .ok_or_else(|| Error::Config {
                path: "<root>".into(),
                msg: "config must be a table".into(),
            })?
            .insert("preset".into(), Value::String(p.name().into()));
    }
    let preset_name = match doc.get("preset") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(Error::Config {
                path: "preset".into(),
                msg: "must be a string".into(),
            })
        }
        None => {
            return Err(Error::Config {
                path: "preset".into(),
                msg: "missing (farfield-2012, kdtl-2013 or custom)".into(),
            })
        }
    };
    let preset = Preset::parse(&preset_name).map_err(|_| Error::Config {
        path: "preset".into(),
        msg: format!("unknown preset `{preset_name}`"),
    })?;
    let mut base = RunConfig::preset(preset);
    merge(&mut base, doc);
    let cfg: RunConfig = serde_path_to_error::deserialize(base).map_err(|e| Error::Config {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses TOML text and resolves it.
pub fn parse_config(text: &str, preset_override: Option<Preset>) -> Result<RunConfig> {
    let doc: toml::Value = toml::from_str(text).map_err(|e| Error::Config {
        path: "<toml>".into(),
        msg: e.to_string(),
    })?;
    let doc = serde_json::to_value(doc).map_err(|e| Error::Config {
        path: "<toml>".into(),
        msg: e.to_string(),
    })?;
    resolve(doc, preset_override)
}

pub fn load_config(path: &Path, preset_override: Option<Preset>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, preset_override)
}

/// Far-field diffraction of phthalocyanine at a 30-slit SiN grating.
pub fn farfield_2012() -> RunConfig {
    RunConfig {
        preset: Preset::Farfield2012,
        seed: 0,
        out_dir: None,
        model: ModelConfig::default(),
        // C32H18N8
        molecule: MoleculeConfig {
            n_atoms: 58.0,
            mass_kg: 514.0 * AMU,
            atomic_radius_m: DEFAULT_ATOMIC_RADIUS,
            lattice_constant_m: DEFAULT_LATTICE_CONSTANT,
            disk_radius_m: None,
        },
        farfield: Some(FarFieldConfig {
            period_m: 100e-9,
            slit_width_m: 79e-9,
            effective_slit_width_m: 43e-9,
            slits: 30,
            l1_m: 0.702,
            l2_m: 0.564,
            source_width_m: 1e-6,
            detector_resolution_m: 4e-6,
            velocity: VelocityConfig::Gaussian {
                mean_m_per_s: 100.0,
                fwhm_m_per_s: 30.0,
            },
            velocity_nodes: crate::velocity::DEFAULT_VELOCITY_NODES,
            fft_points: crate::farfield::DEFAULT_FFT_POINTS,
            q_half_width_m: None,
            x_half_width_m: 200e-6,
            source_x_m: 3e-6,
            source_y_m: 60e-6,
            sigma1_m: 1e-8,
        }),
        nearfield: None,
        scan: ScanConfig::default(),
        localize: LocalizeConfig::default(),
        synthetic: SyntheticConfig::default(),
    }
}

/// Kapitza-Dirac-Talbot-Lau interferometry of a fluorinated porphyrin.
pub fn kdtl_2013() -> RunConfig {
    RunConfig {
        preset: Preset::Kdtl2013,
        seed: 0,
        out_dir: None,
        model: ModelConfig::default(),
        // C284H190F320N4S12
        molecule: MoleculeConfig {
            n_atoms: 810.0,
            mass_kg: 10118.0 * AMU,
            atomic_radius_m: DEFAULT_ATOMIC_RADIUS,
            lattice_constant_m: DEFAULT_LATTICE_CONSTANT,
            disk_radius_m: None,
        },
        farfield: None,
        nearfield: Some(NearFieldConfig {
            period_m: 266e-9,
            slit_width_m: 110e-9,
            length_m: 0.105,
            reference_velocity_m_per_s: 85.0,
            phi0: None,
            n0: None,
            laser: Some(LaserConfig {
                wavelength_m: 532e-9,
                power_w: 1.0,
                polarizability_volume_m3: 410e-30,
                absorption_cross_section_m2: 1.7e-21,
                waist_y_m: 900e-6,
            }),
            velocity: VelocityConfig::Gaussian {
                mean_m_per_s: 85.0,
                fwhm_m_per_s: 30.0,
            },
            velocity_nodes: crate::velocity::DEFAULT_VELOCITY_NODES,
            harmonics: crate::nearfield::DEFAULT_HARMONICS,
            samples: crate::nearfield::DEFAULT_SIGNAL_SAMPLES,
        }),
        scan: ScanConfig::default(),
        localize: LocalizeConfig::default(),
        synthetic: SyntheticConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in ["farfield-2012", "kdtl-2013"] {
            let cfg = parse_config(&format!("preset = \"{p}\""), None).unwrap();
            assert_eq!(cfg.preset.name(), p);
            cfg.experiment().unwrap();
        }
    }

    #[test]
    fn overrides_merge_and_unknown_keys_fail() {
        let cfg = parse_config(
            "preset = \"kdtl-2013\"\n[nearfield]\nlength_m = 0.2\n[nearfield.velocity]\nkind = \"delta\"\nvelocity_m_per_s = 90.0\n",
            None,
        )
        .unwrap();
        let n = cfg.nearfield.unwrap();
        assert_eq!(n.length_m, 0.2);
        assert_eq!(n.period_m, 266e-9);
        assert_eq!(n.velocity, VelocityConfig::Delta { velocity_m_per_s: 90.0 });

        let err = parse_config("preset = \"farfield-2012\"\n[farfield]\nperiod = 1e-7\n", None).unwrap_err();
        match &err {
            Error::Config { path, .. } => assert!(path.starts_with("farfield"), "{path}"),
            e => panic!("{e}"),
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn zero_rate_hashes_like_qm() {
        let qm = farfield_2012();
        let mut csl = farfield_2012();
        csl.model.apply_overrides(Some(ModelName::Csl), Some(0.0), Some(1e-7));
        assert_eq!(qm.hash(true).unwrap(), csl.hash(true).unwrap());
        assert_ne!(qm.hash(false).unwrap(), csl.hash(false).unwrap());
    }

    #[test]
    fn laser_helper_strength() {
        let g = kdtl_2013().nearfield.unwrap().optical().unwrap();
        assert!((g.phi0 - 3.40).abs() < 0.05, "{}", g.phi0);
        assert!((g.n0 - 0.19).abs() < 0.01, "{}", g.n0);
    }
}
