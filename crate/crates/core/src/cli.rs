//! Command implementations behind the `collapse-bounds` binary. Each command
//! resolves a [`RunConfig`], runs the compute modules and writes stamped
//! CSV, JSON and SVG files into the output directory.

use crate::amplification::ModelFamily;
use crate::collapse::{check_validity, CollapseSpec, Status, ValidityCheck, ValidityReport};
use crate::config::{load_config, parse_config, ExperimentSetup, ModelName, Preset, RunConfig};
use crate::error::{Error, Result};
use crate::farfield::{paraxial_window, validate_paraxial, FarFieldPrepared, ParaxialReport};
use crate::fitkit::{
    exclusion_boundary, load_dataset, log_grid, synthetic_dataset, write_dataset, BoundaryEntry, BoundaryValue,
    Dataset, ExclusionMap, Experiment, ScanContext,
};
use crate::localization::{localization_bound, BoundaryPoint};
use crate::nearfield::TalbotPrepared;
use crate::output::{svg_plot, write_csv, write_json, write_text, Cell, Plot, Rect, Scale, Series, Stamp};
use log::{info, warn};
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const DEFAULT_OUT_DIR: &str = "out";

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct CommonOptions {
    pub config: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub model: Option<ModelName>,
    pub lambda: Option<f64>,
    pub rc: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Files written and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
    /// Text for standard output.
    pub report: String,
}

/// Config from `--config` and/or `--preset`, with overrides applied.
pub fn resolve(opts: &CommonOptions) -> Result<RunConfig> {
    let mut cfg = match (&opts.config, opts.preset) {
        (Some(path), p) => load_config(path, p)?,
        (None, Some(p)) => parse_config(&format!("preset = \"{}\"", p.name()), None)?,
        (None, None) => return Err(Error::Usage("give --config FILE or --preset NAME".into())),
    };
    cfg.model.apply_overrides(opts.model, opts.lambda, opts.rc);
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if opts.out.is_some() {
        cfg.out_dir = opts.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn stamp(cfg: &RunConfig, command: &str, canonical_model: bool) -> Result<Stamp> {
    Ok(Stamp {
        command: command.into(),
        config_hash: cfg.hash(canonical_model)?,
        seed: cfg.seed,
    })
}

fn prepare(cfg: &RunConfig) -> Result<Experiment> {
    Ok(match cfg.experiment()? {
        ExperimentSetup::Far(s) => Experiment::Far(FarFieldPrepared::new(&s)?),
        ExperimentSetup::Near(s) => Experiment::Near(TalbotPrepared::new(&s)?),
    })
}

fn require_family(cfg: &RunConfig, command: &str) -> Result<ModelFamily> {
    cfg.model
        .family()?
        .ok_or_else(|| Error::Usage(format!("`{command}` needs a collapse model family (set model.family or --model)")))
}

fn log_report(report: &ValidityReport) {
    for c in &report.checks {
        if c.status != Status::Pass {
            warn!("{} validity: {} has margin {:.3e} ({:?})", report.model, c.condition, c.margin, c.status);
        }
    }
}

#[derive(Serialize)]
struct SimulateMeta {
    preset: &'static str,
    experiment: &'static str,
    model: CollapseSpec,
    visibility: f64,
    points: usize,
    harmonics: Option<Vec<Complex64>>,
    validity: ValidityReport,
}

/// Pattern (far field) or signal (near field) for the configured model.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let st = stamp(cfg, "simulate", true)?;
    let mol = cfg.molecule_model()?;
    let spec = cfg.model.spec(&mol)?;
    let validity = check_validity(&spec, &cfg.mean_geometry()?, Default::default());
    log_report(&validity);
    let (name, header, x, y, meta) = match prepare(cfg)? {
        Experiment::Far(p) => {
            let pattern = p.pattern(&spec)?.normalized();
            let meta = SimulateMeta {
                preset: cfg.preset.name(),
                experiment: "farfield",
                model: spec,
                visibility: pattern.central_visibility(),
                points: pattern.x.len(),
                harmonics: None,
                validity,
            };
            ("pattern", ["x_m", "intensity"], pattern.x, pattern.values, meta)
        }
        Experiment::Near(p) => {
            let signal = p.signal(&spec)?;
            let visibility = signal.visibility()?;
            let signal = signal.normalized();
            let meta = SimulateMeta {
                preset: cfg.preset.name(),
                experiment: "nearfield",
                model: spec,
                visibility,
                points: signal.shifts.len(),
                harmonics: Some(signal.harmonics.clone()),
                validity,
            };
            ("signal", ["shift_m", "signal"], signal.shifts, signal.values, meta)
        }
    };
    let rows: Vec<Vec<Cell>> = x.iter().zip(&y).map(|(&a, &b)| vec![Cell::F(a), Cell::F(b)]).collect();
    let csv = dir.join(format!("{name}.csv"));
    write_csv(&csv, &st, &header, &rows)?;
    let json = dir.join("simulate.json");
    write_json(&json, &st, &meta)?;
    let svg = dir.join(format!("{name}.svg"));
    let title = format!("{} {} ({})", cfg.preset.name(), name, spec.name());
    let plot = Plot {
        title: &title,
        x_label: header[0],
        y_label: header[1],
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![Series {
            label: spec.name(),
            points: x.into_iter().zip(y).collect(),
            markers: false,
        }],
        rects: vec![],
    };
    write_text(&svg, &svg_plot(&plot, &st))?;
    Ok(Outcome {
        files: vec![csv, json, svg],
        exit_code: 0,
        report: format!("{name} visibility = {:.6}\n", meta.visibility),
    })
}

/// Seeded synthetic dataset for the configured model (QM by default).
pub fn synthetic_for(cfg: &RunConfig, experiment: &Experiment) -> Result<Dataset> {
    let spec = cfg.model.spec(&cfg.molecule_model()?)?;
    let positions = cfg.synthetic_positions();
    let model = experiment.predict(&spec, &positions)?;
    synthetic_dataset(
        cfg.data_kind(),
        &positions,
        &model,
        cfg.synthetic.peak_counts,
        cfg.synthetic.error_scale,
        cfg.seed,
    )
}

pub fn gen_synthetic(cfg: &RunConfig) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let st = stamp(cfg, "gen-synthetic", true)?;
    let data = synthetic_for(cfg, &prepare(cfg)?)?;
    let csv = dir.join("synthetic.csv");
    write_dataset(&csv, &data, Some(&st.line()))?;
    let svg = dir.join("synthetic.svg");
    let plot = Plot {
        title: "synthetic counts",
        x_label: "position [m]",
        y_label: "count",
        x_scale: Scale::Linear,
        y_scale: Scale::Linear,
        series: vec![Series {
            label: cfg.preset.name(),
            points: data.positions.iter().cloned().zip(data.counts.iter().cloned()).collect(),
            markers: true,
        }],
        rects: vec![],
    };
    write_text(&svg, &svg_plot(&plot, &st))?;
    Ok(Outcome {
        files: vec![csv, svg],
        exit_code: 0,
        report: format!("{} synthetic points written\n", data.len()),
    })
}

#[derive(Serialize)]
struct ScanMeta<'a> {
    family: ModelFamily,
    data_source: String,
    data_sha256: String,
    chi2_qm: f64,
    delta_chi2: f64,
    rates: &'a [f64],
    lengths: &'a [f64],
    cells: &'a [crate::fitkit::MapCell],
    boundary: &'a [BoundaryEntry],
}

fn data_digest(d: &Dataset) -> String {
    let mut h = Sha256::new();
    for (x, c) in d.positions.iter().zip(&d.counts) {
        h.update(x.to_le_bytes());
        h.update(c.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn cell_span(grid: &[f64], k: usize) -> (f64, f64) {
    let step = if grid.len() > 1 {
        (grid[grid.len() - 1] / grid[0]).powf(1.0 / (grid.len() - 1) as f64)
    } else {
        10.0
    };
    (grid[k] / step.sqrt(), grid[k] * step.sqrt())
}

/// A finished scan: map, per-length boundary and the fitted data.
pub struct ScanRun {
    pub family: ModelFamily,
    pub map: ExclusionMap,
    pub boundary: Vec<BoundaryEntry>,
    pub data: Dataset,
    pub data_source: String,
}

/// Fits the configured family over the scan grid. Without a dataset path
/// (argument or `scan.data`) the seeded synthetic QM dataset is used.
pub fn run_scan(cfg: &RunConfig, data_path: Option<&Path>) -> Result<ScanRun> {
    let family = require_family(cfg, "scan")?;
    let experiment = prepare(cfg)?;
    let mol = cfg.molecule_model()?;
    let path = data_path.map(Path::to_path_buf).or_else(|| cfg.scan.data.clone());
    let (data, data_source) = match &path {
        Some(p) => (
            load_dataset(p, cfg.data_kind(), cfg.scan.error_scale)?,
            p.display().to_string(),
        ),
        None => {
            info!("no dataset given; fitting seeded synthetic QM data (seed {})", cfg.seed);
            let mut qm = cfg.clone();
            qm.model.family = ModelName::Qm;
            let mut d = synthetic_for(&qm, &experiment)?;
            d.error_scale = cfg.scan.error_scale;
            (d, format!("synthetic-qm seed={}", cfg.seed))
        }
    };
    let ctx = ScanContext {
        experiment: &experiment,
        molecule: &mol,
        data: &data,
        family,
        fit: cfg.scan.fit_options(),
        threshold: cfg.scan.delta_chi2,
    };
    let s = &cfg.scan;
    let rates = log_grid(s.rate_min, s.rate_max, s.rate_points);
    let lengths = log_grid(s.length_min_m, s.length_max_m, s.length_points);
    let map = ctx.scan(&rates, &lengths)?;
    for c in map.cells.iter().filter(|c| c.error.is_some()) {
        warn!("cell ({:e}, {:e}) failed: {}", c.lambda, c.r_c, c.error.as_deref().unwrap_or(""));
    }
    let boundary = exclusion_boundary(&map, s.refinements, &|l, r| {
        Ok(ctx.chi2_at(l, r)? - map.chi2_qm > map.threshold)
    })?;
    Ok(ScanRun {
        family,
        map,
        boundary,
        data,
        data_source,
    })
}

/// chi-square exclusion map over (rate, length) and its boundary.
pub fn scan(cfg: &RunConfig, data_path: Option<&Path>) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let st = stamp(cfg, "scan", false)?;
    let ScanRun {
        family,
        map,
        boundary,
        data,
        data_source: source,
    } = run_scan(cfg, data_path)?;
    let (rates, lengths) = (&map.lambdas, &map.r_cs);
    let rows: Vec<Vec<Cell>> = map
        .cells
        .iter()
        .map(|c| {
            vec![
                Cell::F(c.lambda),
                Cell::F(c.r_c),
                Cell::Opt(c.chi2),
                Cell::Opt(c.chi2.map(|v| v - map.chi2_qm)),
                Cell::B(c.excluded),
                Cell::S(c.error.clone().unwrap_or_default()),
            ]
        })
        .collect();
    let map_csv = dir.join("exclusion.csv");
    write_csv(
        &map_csv,
        &st,
        &["rate", "length_m", "chi2", "delta_chi2", "excluded", "error"],
        &rows,
    )?;
    let brows: Vec<Vec<Cell>> = boundary
        .iter()
        .map(|b| {
            let kind = match b.boundary {
                BoundaryValue::Open => "open",
                BoundaryValue::AtGridBottom { .. } => "at-grid-bottom",
                BoundaryValue::Refined { .. } => "refined",
            };
            vec![Cell::F(b.r_c), Cell::Opt(b.boundary.lambda()), Cell::S(kind.into())]
        })
        .collect();
    let b_csv = dir.join("boundary.csv");
    write_csv(&b_csv, &st, &["length_m", "rate", "kind"], &brows)?;
    let json = dir.join("exclusion.json");
    write_json(
        &json,
        &st,
        &ScanMeta {
            family,
            data_source: source,
            data_sha256: data_digest(&data),
            chi2_qm: map.chi2_qm,
            delta_chi2: map.threshold,
            rates: &map.lambdas,
            lengths: &map.r_cs,
            cells: &map.cells,
            boundary: &boundary,
        },
    )?;
    let rects = map
        .cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (j, i) = (k / rates.len(), k % rates.len());
            Rect {
                x: cell_span(lengths, j),
                y: cell_span(rates, i),
                fill: if c.error.is_some() {
                    "#bbbbbb"
                } else if c.excluded {
                    "#f4a6a6"
                } else {
                    "#d8ecd8"
                },
            }
        })
        .collect();
    let title = format!("{} exclusion map ({})", family.name(), cfg.preset.name());
    let plot = Plot {
        title: &title,
        x_label: "length [m]",
        y_label: "rate",
        x_scale: Scale::Log,
        y_scale: Scale::Log,
        series: vec![Series {
            label: "boundary",
            points: boundary
                .iter()
                .filter_map(|b| b.boundary.lambda().map(|l| (b.r_c, l)))
                .collect(),
            markers: false,
        }],
        rects,
    };
    let svg = dir.join("exclusion.svg");
    write_text(&svg, &svg_plot(&plot, &st))?;
    let excluded = map.cells.iter().filter(|c| c.excluded).count();
    Ok(Outcome {
        files: vec![map_csv, b_csv, json, svg],
        exit_code: 0,
        report: format!(
            "{excluded} of {} cells excluded (chi2_qm = {:.4}, delta = {})\n",
            map.cells.len(),
            map.chi2_qm,
            map.threshold
        ),
    })
}

#[derive(Serialize)]
struct LocalizeMeta<'a> {
    family: ModelFamily,
    scenario: crate::localization::LocalizationScenario,
    points: &'a [BoundaryPoint],
}

/// Localization boundary of the configured family for the graphene-disk scenario.
pub fn localize(cfg: &RunConfig) -> Result<Outcome> {
    let family = require_family(cfg, "localize")?;
    let dir = out_dir(cfg)?;
    let st = stamp(cfg, "localize", false)?;
    let l = &cfg.localize;
    let sc = l.scenario();
    let grid = log_grid(l.length_min_m, l.length_max_m, l.length_points);
    let points = localization_bound(family, &sc, &grid)?;
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| {
            vec![
                Cell::F(p.length),
                Cell::Opt(p.min_rate),
                Cell::Opt(p.ratio),
                Cell::S(p.localizes.map(|b| b.to_string()).unwrap_or_default()),
            ]
        })
        .collect();
    let csv = dir.join("localization.csv");
    write_csv(&csv, &st, &["length_m", "min_rate", "ratio", "localizes"], &rows)?;
    let json = dir.join("localization.json");
    write_json(
        &json,
        &st,
        &LocalizeMeta {
            family,
            scenario: sc,
            points: &points,
        },
    )?;
    let dp = matches!(family, ModelFamily::Dp);
    let series_points: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| if dp { p.ratio.map(|r| (p.length, r)) } else { p.min_rate.map(|r| (p.length, r)) })
        .collect();
    let title = format!("{} localization boundary", family.name());
    let plot = Plot {
        title: &title,
        x_label: "length [m]",
        y_label: if dp { "decay ratio" } else { "minimal rate" },
        x_scale: Scale::Log,
        y_scale: if dp { Scale::Linear } else { Scale::Log },
        series: vec![Series {
            label: family.name(),
            points: series_points,
            markers: points.len() == 1,
        }],
        rects: vec![],
    };
    let svg = dir.join("localization.svg");
    write_text(&svg, &svg_plot(&plot, &st))?;
    let report = match family {
        ModelFamily::Dp => format!(
            "DP localizes at {} of {} R0 values\n",
            points.iter().filter(|p| p.localizes == Some(true)).count(),
            points.len()
        ),
        _ => format!("{} boundary points written\n", points.len()),
    };
    Ok(Outcome {
        files: vec![csv, json, svg],
        exit_code: 0,
        report,
    })
}

#[derive(Serialize)]
struct ValidateMeta {
    paraxial: Option<ParaxialReport>,
    paraxial_window: Option<(f64, f64)>,
    model: ValidityReport,
    passed: bool,
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Marginal => "MARGINAL",
        Status::Fail => "FAIL",
    }
}

fn report_lines(out: &mut String, checks: &[ValidityCheck]) {
    for c in checks {
        out.push_str(&format!("  {:<8} {:<40} margin {:.3e}\n", status_word(c.status), c.condition, c.margin));
    }
}

/// Paraxial and model-regime margins; exit code 1 if any check fails.
pub fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let dir = out_dir(cfg)?;
    let st = stamp(cfg, "validate", true)?;
    let geom = cfg.mean_geometry()?;
    let spec = cfg.model.spec(&cfg.molecule_model()?)?;
    let mut text = String::new();
    let (paraxial, window) = match &cfg.farfield {
        Some(f) => {
            let r = validate_paraxial(&geom, f.source_x_m, f.source_y_m, f.sigma1_m);
            let w = paraxial_window(&geom, f.source_x_m, f.source_y_m);
            text.push_str(&format!(
                "paraxial conditions at sigma1 = {:e} m (sigma2 = {:.3e} m, sigma3 = {:.3e} m)\n",
                r.sigma1, r.sigma2, r.sigma3
            ));
            report_lines(&mut text, &r.checks);
            match w {
                Some((lo, hi)) => text.push_str(&format!("  admissible sigma1 window: [{lo:.4e}, {hi:.4e}] m\n")),
                None => text.push_str("  admissible sigma1 window: empty\n"),
            }
            (Some(r), w)
        }
        None => {
            text.push_str("paraxial conditions: not applicable to the near-field configuration\n");
            (None, None)
        }
    };
    let model = check_validity(&spec, &geom, Default::default());
    text.push_str(&format!("model {} regime conditions\n", model.model));
    if model.checks.is_empty() {
        text.push_str("  none\n");
    }
    report_lines(&mut text, &model.checks);
    let passed = !model.any_fail() && !paraxial.as_ref().is_some_and(|p| p.any_fail());
    text.push_str(if passed { "result: ok\n" } else { "result: some checks failed\n" });
    let json = dir.join("validate.json");
    write_json(
        &json,
        &st,
        &ValidateMeta {
            paraxial,
            paraxial_window: window,
            model,
            passed,
        },
    )?;
    let txt = dir.join("validate.txt");
    write_text(&txt, &format!("# {}\n{text}", st.line()))?;
    Ok(Outcome {
        files: vec![json, txt],
        exit_code: if passed { 0 } else { 1 },
        report: text,
    })
}
