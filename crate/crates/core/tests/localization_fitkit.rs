//! Localization requirement and fitting/scanning on synthetic data.

use collapse_bounds::amplification::{lambda_adler, ModelFamily};
use collapse_bounds::collapse::{CollapseSpec, CslParams, DcslParams};
use collapse_bounds::config::{farfield_2012, ExperimentSetup};
use collapse_bounds::constants::M0;
use collapse_bounds::farfield::FarFieldPrepared;
use collapse_bounds::fitkit::*;
use collapse_bounds::localization::*;

#[test]
fn csl_ratio_is_the_closed_form() {
    let sc = LocalizationScenario::default();
    for (lambda, r_c) in [(1e-12, 1e-7), (1e-8, 1e-6), (1e-10, 3e-5)] {
        let spec = amplified_spec(ModelFamily::Csl, lambda, r_c, &sc).unwrap();
        let amp = lambda_adler(&sc.molecule(), lambda, r_c).unwrap();
        let x = sc.separation * sc.separation / (4.0 * r_c * r_c);
        let expected = (-amp * sc.time * (1.0 - (-x).exp())).exp();
        let got = decay_ratio(&spec, &sc).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.max(1e-300), "{got} vs {expected}");
    }
}

#[test]
fn csl_min_lambda_sits_on_the_threshold() {
    let sc = LocalizationScenario::default();
    for r_c in [1e-8, 1e-7, 1e-6, 1e-5, 1e-4] {
        let lambda = csl_min_lambda(r_c, &sc).unwrap();
        let ratio = decay_ratio(&amplified_spec(ModelFamily::Csl, lambda, r_c, &sc).unwrap(), &sc).unwrap();
        assert!((ratio / sc.threshold - 1.0).abs() < 1e-10, "r_C={r_c:e}: {ratio}");
    }
}

#[test]
fn hot_dcsl_reduces_to_csl() {
    let sc = LocalizationScenario::default();
    let (lambda_eff, r_c) = (40.0, 1e-6);
    let csl = decay_ratio(&CollapseSpec::Csl(CslParams { lambda_eff, r_c }), &sc).unwrap();
    let dcsl = decay_ratio(&CollapseSpec::Dcsl(DcslParams { lambda_eff, r_c, temperature: 1e6 }), &sc).unwrap();
    assert!((dcsl / csl - 1.0).abs() < 1e-6, "{dcsl} vs {csl}");
}

#[test]
fn ratio_falls_with_rate() {
    let sc = LocalizationScenario::default();
    for family in [ModelFamily::Csl, ModelFamily::Dcsl { temperature: 1.0 }] {
        let mut prev = 1.0;
        for k in -18..-8 {
            let spec = amplified_spec(family, 10f64.powi(k), 1e-6, &sc).unwrap();
            let r = decay_ratio(&spec, &sc).unwrap();
            assert!(r <= prev, "{} not monotone at 1e{k}", family.name());
            prev = r;
        }
        assert!(prev < 1.0);
    }
}

#[test]
fn qmupl_bound_is_the_formula() {
    let sc = LocalizationScenario::default();
    let b = localization_bound(ModelFamily::Qmupl, &sc, &[]).unwrap();
    assert_eq!(b.len(), 1);
    let eta = b[0].min_rate.unwrap();
    let m = sc.molecule().total_mass();
    let expected = M0 / (m * sc.time * sc.separation * sc.separation);
    assert!((eta / expected - 1.0).abs() < 1e-12);
    let spec = amplified_spec(ModelFamily::Qmupl, eta, 0.0, &sc).unwrap();
    assert!((decay_ratio(&spec, &sc).unwrap() / sc.threshold - 1.0).abs() < 1e-12);
}

fn far_experiment() -> Experiment {
    match farfield_2012().experiment().unwrap() {
        ExperimentSetup::Far(s) => Experiment::Far(FarFieldPrepared::new(&s).unwrap()),
        _ => unreachable!(),
    }
}

fn positions() -> Vec<f64> {
    (0..201).map(|i| -100e-6 + 1e-6 * i as f64).collect()
}

#[test]
fn dataset_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let data = Dataset::new(DataKind::Nearfield, vec![0.0, 1.5e-7, 3e-7], vec![10.0, 0.0, 12345.0], 2.0).unwrap();
    write_dataset(&path, &data, Some("test data")).unwrap();
    assert_eq!(load_dataset(&path, DataKind::Nearfield, 2.0).unwrap(), data);
    std::fs::write(&path, "position,count\n0,1\n1,-3\n").unwrap();
    assert!(matches!(load_dataset(&path, DataKind::Farfield, 1.0), Err(collapse_bounds::Error::Validation(_))));
    std::fs::write(&path, "x,y\n0,1\n").unwrap();
    assert!(matches!(load_dataset(&path, DataKind::Farfield, 1.0), Err(collapse_bounds::Error::Parse { .. })));
}

#[test]
fn quantum_fit_to_quantum_data_has_unit_reduced_chi2() {
    let exp = far_experiment();
    let x = positions();
    let model = exp.predict(&CollapseSpec::Qm, &x).unwrap();
    for seed in [1, 2, 3, 4, 5] {
        let data = synthetic_dataset(DataKind::Farfield, &x, &model, 1e5, 1.0, seed).unwrap();
        let fit = exp.fit(&CollapseSpec::Qm, &data, &FitOptions::default()).unwrap();
        let reduced = fit.chi2 / (x.len() - 2) as f64;
        assert!((0.8..=1.2).contains(&reduced), "seed {seed}: reduced chi2 {reduced}");
    }
}

#[test]
fn noiseless_affine_data_is_recovered_exactly() {
    let exp = far_experiment();
    let x = positions();
    let raw = exp.predict(&CollapseSpec::Qm, &x).unwrap();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let model: Vec<f64> = raw.iter().map(|p| p / max).collect();
    let counts: Vec<f64> = model.iter().map(|p| 3.0 * p + 5.0).collect();
    let data = Dataset::new(DataKind::Farfield, x, counts, 1.0).unwrap();
    let fit = fit_linear(&model, &data, true).unwrap();
    assert!((fit.amplitude - 3.0).abs() < 1e-9);
    assert!((fit.offset - 5.0).abs() < 1e-9);
    assert!(fit.chi2 < 1e-15);
}

#[test]
fn synthetic_data_is_seeded() {
    let x = positions();
    let model: Vec<f64> = x.iter().map(|v| (v * 1e5).cos().powi(2)).collect();
    let a = synthetic_dataset(DataKind::Farfield, &x, &model, 1e4, 4.5, 7).unwrap();
    let b = synthetic_dataset(DataKind::Farfield, &x, &model, 1e4, 4.5, 7).unwrap();
    let c = synthetic_dataset(DataKind::Farfield, &x, &model, 1e4, 4.5, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exclusion_grows_with_rate_in_every_column() {
    let exp = far_experiment();
    let cfg = farfield_2012();
    let mol = cfg.molecule_model().unwrap();
    let x = positions();
    let model = exp.predict(&CollapseSpec::Qm, &x).unwrap();
    let data = synthetic_dataset(DataKind::Farfield, &x, &model, 1e5, 4.5, 11).unwrap();
    let ctx = ScanContext {
        experiment: &exp,
        molecule: &mol,
        data: &data,
        family: ModelFamily::Csl,
        fit: FitOptions::default(),
        threshold: DEFAULT_DELTA_CHI2,
    };
    let map = ctx.scan(&log_grid(1e-9, 1e1, 6), &log_grid(1e-8, 1e-5, 3)).unwrap();
    for j in 0..map.r_cs.len() {
        let col: Vec<bool> = (0..map.lambdas.len()).map(|i| map.cell(i, j).excluded).collect();
        assert!(col.windows(2).all(|w| !w[0] || w[1]), "column {j}: {col:?}");
        assert!(col[col.len() - 1], "strongest rate not excluded at r_C={:e}", map.r_cs[j]);
        assert!(!col[0]);
    }
}
