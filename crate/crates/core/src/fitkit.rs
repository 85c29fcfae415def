//! Fringe data, weighted least-squares fits with amplitude and background
//! nuisances, and chi-square exclusion maps over collapse parameters.

use crate::amplification::{amplify, MoleculeModel, ModelFamily};
use crate::collapse::CollapseSpec;
use crate::error::{Error, Result};
use crate::farfield::FarFieldPrepared;
use crate::nearfield::TalbotPrepared;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Error inflation factor on the Poisson error.
pub const DEFAULT_ERROR_SCALE: f64 = 4.5;
/// 95% quantile of chi-square with one degree of freedom.
pub const DEFAULT_DELTA_CHI2: f64 = 3.84;
pub const BOUNDARY_REFINEMENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Farfield,
    Nearfield,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub kind: DataKind,
    /// Detector position (far field) or third-grating shift (near field) [m].
    pub positions: Vec<f64>,
    pub counts: Vec<f64>,
    pub error_scale: f64,
}

impl Dataset {
    pub fn new(kind: DataKind, positions: Vec<f64>, counts: Vec<f64>, error_scale: f64) -> Result<Self> {
        let d = Dataset {
            kind,
            positions,
            counts,
            error_scale,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.counts.len() || self.positions.is_empty() {
            return Err(Error::Validation("dataset needs equally many positions and counts".into()));
        }
        if let Some(i) = self.positions.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!(
                "positions must increase strictly (row {} repeats or goes back)",
                i + 2
            )));
        }
        if let Some(i) = self.counts.iter().position(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::Validation(format!(
                "count = {} in row {} is negative or not finite",
                self.counts[i],
                i + 1
            )));
        }
        if !(self.error_scale > 0.0 && self.error_scale.is_finite()) {
            return Err(Error::Validation("error scale must be > 0".into()));
        }
        Ok(())
    }

    /// sigma_i = a sqrt(max(I_i, 1)).
    pub fn sigma(&self, i: usize) -> f64 {
        self.error_scale * self.counts[i].max(1.0).sqrt()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    position: f64,
    count: f64,
}

/// Reads `position,count` CSV; lines starting with '#' are comments.
pub fn load_dataset(path: &Path, kind: DataKind, error_scale: f64) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["position", "count"] {
        return Err(Error::Parse {
            line: headers.position().map_or(1, |p| p.line()),
            msg: format!("expected header `position,count`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut positions = Vec::new();
    let mut counts = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if row.count < 0.0 {
            return Err(Error::Validation(format!(
                "count = {} on line {line} is negative",
                row.count
            )));
        }
        positions.push(row.position);
        counts.push(row.count);
    }
    Dataset::new(kind, positions, counts, error_scale)
}

/// Writes `position,count` CSV with an optional leading comment line.
pub fn write_dataset(path: &Path, data: &Dataset, comment: Option<&str>) -> Result<()> {
    let mut out = Vec::new();
    if let Some(c) = comment {
        writeln!(out, "# {c}").expect("write to memory");
    }
    writeln!(out, "position,count").expect("write to memory");
    for (x, c) in data.positions.iter().zip(&data.counts) {
        writeln!(out, "{x},{c}").expect("write to memory");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Synthetic counts: peak * p(x)/max p plus Gaussian noise of width
/// a sqrt(max(mean, 1)), rounded and clipped at zero.
pub fn synthetic_dataset(
    kind: DataKind,
    positions: &[f64],
    model: &[f64],
    peak_counts: f64,
    error_scale: f64,
    seed: u64,
) -> Result<Dataset> {
    let max = model.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Validation("synthetic model pattern is identically zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = model
        .iter()
        .map(|p| {
            let mean = peak_counts * p / max;
            let noise = Normal::new(0.0, error_scale * mean.max(1.0).sqrt()).expect("finite width");
            (mean + noise.sample(&mut rng)).round().max(0.0)
        })
        .collect();
    Dataset::new(kind, positions.to_vec(), counts, error_scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    /// Fit a constant background B.
    pub background: bool,
    /// Largest position shift tried; 0 disables the shift nuisance.
    pub max_shift: f64,
    pub shift_steps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            background: true,
            max_shift: 0.0,
            shift_steps: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub chi2: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub shift: f64,
}

/// Minimizes sum ((A p_i + B - I_i)/sigma_i)^2 over A >= 0 and B.
pub fn fit_linear(model: &[f64], data: &Dataset, background: bool) -> Result<FitResult> {
    if model.len() != data.len() {
        return Err(Error::Fit("model and data lengths differ".into()));
    }
    let (mut sw, mut sp, mut spp, mut si, mut spi) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&p, &c)) in model.iter().zip(&data.counts).enumerate() {
        let w = 1.0 / (data.sigma(i) * data.sigma(i));
        sw += w;
        sp += w * p;
        spp += w * p * p;
        si += w * c;
        spi += w * p * c;
    }
    let (mut a, mut b) = if background {
        let det = spp * sw - sp * sp;
        if det > 1e-12 * spp * sw {
            ((spi * sw - sp * si) / det, (spp * si - sp * spi) / det)
        } else {
            // Flat model: only the constant is determined.
            (0.0, si / sw)
        }
    } else {
        if !(spp > 0.0) {
            return Err(Error::Fit("model vanishes on every data point".into()));
        }
        (spi / spp, 0.0)
    };
    if a < 0.0 {
        a = 0.0;
        b = if background { si / sw } else { 0.0 };
    }
    let chi2 = model
        .iter()
        .zip(&data.counts)
        .enumerate()
        .map(|(i, (&p, &c))| {
            let r = (a * p + b - c) / data.sigma(i);
            r * r
        })
        .sum();
    Ok(FitResult {
        chi2,
        amplitude: a,
        offset: b,
        shift: 0.0,
    })
}

/// Fit of a model evaluated through `eval(position)`, with the optional
/// shift nuisance scanned on a uniform grid.
pub fn chi_square(eval: &dyn Fn(f64) -> f64, data: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    let shifts: Vec<f64> = if opts.max_shift > 0.0 && opts.shift_steps > 0 {
        let n = opts.shift_steps as i64;
        (-n..=n).map(|i| opts.max_shift * i as f64 / n as f64).collect()
    } else {
        vec![0.0]
    };
    let mut best: Option<FitResult> = None;
    for s in shifts {
        let model: Vec<f64> = data.positions.iter().map(|&x| eval(x - s)).collect();
        let mut r = fit_linear(&model, data, opts.background)?;
        r.shift = s;
        if best.map_or(true, |b| r.chi2 < b.chi2) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one shift"))
}

/// A prepared experiment that predicts the model curve at data positions.
pub enum Experiment {
    Far(FarFieldPrepared),
    Near(TalbotPrepared),
}

impl Experiment {
    pub fn kind(&self) -> DataKind {
        match self {
            Experiment::Far(_) => DataKind::Farfield,
            Experiment::Near(_) => DataKind::Nearfield,
        }
    }

    pub fn fit(&self, spec: &CollapseSpec, data: &Dataset, opts: &FitOptions) -> Result<FitResult> {
        match self {
            Experiment::Far(p) => {
                let pattern = p.pattern(spec)?;
                chi_square(&|x| pattern.interpolate(x), data, opts)
            }
            Experiment::Near(p) => {
                let signal = p.signal(spec)?;
                chi_square(&|x| signal.value_at(x), data, opts)
            }
        }
    }

    /// Model curve at the given positions.
    pub fn predict(&self, spec: &CollapseSpec, positions: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Experiment::Far(p) => {
                let pattern = p.pattern(spec)?;
                positions.iter().map(|&x| pattern.interpolate(x)).collect()
            }
            Experiment::Near(p) => {
                let s = p.signal(spec)?;
                positions.iter().map(|&x| s.value_at(x)).collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub lambda: f64,
    pub r_c: f64,
    pub chi2: Option<f64>,
    pub excluded: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionMap {
    pub family: ModelFamily,
    /// Rate axis (lambda, or eta for QMUPL).
    pub lambdas: Vec<f64>,
    /// Length axis (r_C, or R0 for DP).
    pub r_cs: Vec<f64>,
    /// Row-major over r_C then lambda: cells[j * lambdas.len() + i].
    pub cells: Vec<MapCell>,
    pub chi2_qm: f64,
    pub threshold: f64,
}

impl ExclusionMap {
    pub fn cell(&self, i_lambda: usize, j_rc: usize) -> &MapCell {
        &self.cells[j_rc * self.lambdas.len() + i_lambda]
    }
}

/// Log-spaced grid with `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Everything a scan needs besides the grid.
pub struct ScanContext<'a> {
    pub experiment: &'a Experiment,
    pub molecule: &'a MoleculeModel,
    pub data: &'a Dataset,
    pub family: ModelFamily,
    pub fit: FitOptions,
    pub threshold: f64,
}

impl ScanContext<'_> {
    pub fn chi2_qm(&self) -> Result<f64> {
        Ok(self.experiment.fit(&CollapseSpec::Qm, self.data, &self.fit)?.chi2)
    }

    pub fn chi2_at(&self, lambda: f64, r_c: f64) -> Result<f64> {
        let spec = amplify(self.family, lambda, r_c, self.molecule)?;
        Ok(self.experiment.fit(&spec, self.data, &self.fit)?.chi2)
    }

    /// Fills the map; per-cell failures are recorded and the scan goes on.
    pub fn scan(&self, lambdas: &[f64], r_cs: &[f64]) -> Result<ExclusionMap> {
        let chi2_qm = self.chi2_qm()?;
        let cells: Vec<MapCell> = (0..lambdas.len() * r_cs.len())
            .into_par_iter()
            .map(|k| {
                let (j, i) = (k / lambdas.len(), k % lambdas.len());
                let (lambda, r_c) = (lambdas[i], r_cs[j]);
                match self.chi2_at(lambda, r_c) {
                    Ok(chi2) => MapCell {
                        lambda,
                        r_c,
                        chi2: Some(chi2),
                        excluded: chi2 - chi2_qm > self.threshold,
                        error: None,
                    },
                    Err(e) => MapCell {
                        lambda,
                        r_c,
                        chi2: None,
                        excluded: false,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();
        Ok(ExclusionMap {
            family: self.family,
            lambdas: lambdas.to_vec(),
            r_cs: r_cs.to_vec(),
            cells,
            chi2_qm,
            threshold: self.threshold,
        })
    }
}

/// Smallest excluded rate in one r_C column of the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryValue {
    /// No cell of the column is excluded.
    Open,
    /// Every cell is excluded; the boundary lies at or below the grid bottom.
    AtGridBottom { lambda: f64 },
    Refined { lambda: f64 },
}

impl BoundaryValue {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            BoundaryValue::Open => None,
            BoundaryValue::AtGridBottom { lambda } | BoundaryValue::Refined { lambda } => Some(*lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub r_c: f64,
    pub boundary: BoundaryValue,
}

/// Per-column boundary: the first excluded lambda, then `refinements`
/// bisection steps in ln lambda between it and its allowed neighbour, each
/// step deciding exclusion through `excluded(lambda, r_c)`.
pub fn exclusion_boundary(
    map: &ExclusionMap,
    refinements: usize,
    excluded: &(dyn Fn(f64, f64) -> Result<bool> + Sync),
) -> Result<Vec<BoundaryEntry>> {
    (0..map.r_cs.len())
        .into_par_iter()
        .map(|j| {
            let r_c = map.r_cs[j];
            let first = (0..map.lambdas.len()).find(|&i| map.cell(i, j).excluded);
            let boundary = match first {
                None => BoundaryValue::Open,
                Some(0) => BoundaryValue::AtGridBottom { lambda: map.lambdas[0] },
                Some(i) => {
                    let (mut lo, mut hi) = (map.lambdas[i - 1], map.lambdas[i]);
                    for _ in 0..refinements {
                        let mid = (lo * hi).sqrt();
                        if excluded(mid, r_c)? {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    BoundaryValue::Refined { lambda: hi }
                }
            };
            Ok(BoundaryEntry { r_c, boundary })
        })
        .collect()
}
