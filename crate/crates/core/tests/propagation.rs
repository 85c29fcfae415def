//! Far-field and Talbot-Lau propagation checks on the preset setups.

mod common;

use collapse_bounds::collapse::{CcslParams, CollapseSpec, DcslParams};
use collapse_bounds::config::{farfield_2012, kdtl_2013, ExperimentSetup};
use collapse_bounds::farfield::{detector_convolve, pattern_single_v, FarFieldGrid, FarFieldPrepared};
use collapse_bounds::nearfield::{talbot_displacement, talbot_signal, TalbotPrepared, TalbotSetup};
use collapse_bounds::optics::MechanicalGrating;
use collapse_bounds::velocity::VelocityProfile;
use collapse_bounds::Error;
use common::{csl_spec, far_geometry, farfield_gap};

fn far_prepared() -> FarFieldPrepared {
    match farfield_2012().experiment().unwrap() {
        ExperimentSetup::Far(s) => FarFieldPrepared::new(&s).unwrap(),
        _ => unreachable!(),
    }
}

fn near_setup() -> TalbotSetup {
    match kdtl_2013().experiment().unwrap() {
        ExperimentSetup::Near(s) => s,
        _ => unreachable!(),
    }
}

#[test]
fn fft_pattern_matches_direct_quadrature_for_other_models() {
    let dcsl = CollapseSpec::Dcsl(DcslParams { lambda_eff: 50.0, r_c: 3e-8, temperature: 0.1 });
    assert!(farfield_gap(3, &dcsl) < 1e-6);
}

#[test]
fn qm_pattern_is_symmetric_and_positive() {
    let p = far_prepared().pattern(&CollapseSpec::Qm).unwrap();
    let n = p.values.len();
    let max = p.max();
    for i in 0..n {
        assert!(p.values[i] >= 0.0);
        assert!((p.values[i] - p.values[n - 1 - i]).abs() <= 1e-9 * max);
    }
}

#[test]
fn zero_rate_is_quantum_bitwise() {
    let prep = far_prepared();
    let qm = prep.pattern(&CollapseSpec::Qm).unwrap();
    let zero = prep.pattern(&csl_spec(0.0, 1e-7)).unwrap();
    assert_eq!(qm, zero);
}

#[test]
fn collapse_lowers_far_field_visibility() {
    // The first-trough visibility is read off grid points and can wiggle by
    // 1e-4 for weak rates, so monotonicity is checked on the distance from
    // the quantum pattern and visibility only once the damping is strong.
    let prep = far_prepared();
    let qm = prep.pattern(&CollapseSpec::Qm).unwrap().normalized();
    let mut prev = 0.0;
    for lambda in [10.0, 100.0, 1000.0, 1e4] {
        let p = prep.pattern(&csl_spec(lambda, 1e-7)).unwrap().normalized();
        let dist: f64 = p.values.iter().zip(&qm.values).map(|(a, b)| (a - b).abs()).sum();
        assert!(dist > prev, "distance {dist} at Lambda={lambda} not above {prev}");
        prev = dist;
    }
    let strong = prep.pattern(&csl_spec(1e4, 1e-7)).unwrap().normalized();
    let (vs, vq) = (strong.central_visibility(), qm.central_visibility());
    assert!(vs < vq - 0.02, "visibility {vs} vs quantum {vq}");
}

#[test]
fn detector_box_preserves_total() {
    let geom = far_geometry();
    let grating = MechanicalGrating {
        period: 100e-9,
        slit_width: 79e-9,
        effective_slit_width: 43e-9,
        slits: Some(30),
    };
    let grid = FarFieldGrid { points: 8192, q_half_width: None, x_half_width: 150e-6 };
    let p = pattern_single_v(&grating, &geom, &CollapseSpec::Qm, 1e-6, grid).unwrap();
    let blurred = detector_convolve(&p, 4e-6).unwrap();
    let (a, b): (f64, f64) = (p.values.iter().sum(), blurred.values.iter().sum());
    // The window cuts tails, so compare interior-dominated sums loosely.
    assert!((a / b - 1.0).abs() < 1e-3);
    assert!(blurred.max() <= p.max());
    assert!(matches!(detector_convolve(&p, 0.1 * p.spacing()), Err(Error::Validation(_))));
}

#[test]
fn oversized_window_is_a_resolution_error() {
    let geom = far_geometry();
    let grating = MechanicalGrating {
        period: 100e-9,
        slit_width: 79e-9,
        effective_slit_width: 43e-9,
        slits: Some(30),
    };
    let grid = FarFieldGrid { points: 64, q_half_width: None, x_half_width: 1.0 };
    assert!(matches!(
        pattern_single_v(&grating, &geom, &CollapseSpec::Qm, 1e-6, grid),
        Err(Error::Resolution(_))
    ));
}

#[test]
fn talbot_harmonics_are_damped_by_d_at_talbot_displacements() {
    let setup = near_setup();
    let geom = collapse_bounds::collapse::BeamGeometry::new(setup.length, setup.length, setup.mass, 85.0).unwrap();
    let optical = setup.optical.scaled(setup.reference_velocity, 85.0);
    let spec = csl_spec(30.0, 1e-7);
    let qm = talbot_signal(&setup.mask, &optical, &geom, &CollapseSpec::Qm, 64, 64).unwrap();
    let csl = talbot_signal(&setup.mask, &optical, &geom, &spec, 64, 64).unwrap();
    for n in 0..8 {
        let d = spec.damping(talbot_displacement(n, setup.mask.period, &geom), &geom).unwrap();
        let expected = qm.harmonic(n) * d;
        assert!((csl.harmonic(n) - expected).norm() <= 1e-14 * qm.harmonic(0).norm());
    }
}

#[test]
fn talbot_signal_is_real_and_resums() {
    let prep = TalbotPrepared::new(&near_setup()).unwrap();
    let s = prep.signal(&CollapseSpec::Qm).unwrap();
    let n_max = s.harmonics.len() as i64 - 1;
    for (&x, &v) in s.shifts.iter().zip(&s.values).step_by(7) {
        let mut total = num_complex::Complex64::new(0.0, 0.0);
        for n in -n_max..=n_max {
            let phase = 2.0 * std::f64::consts::PI * n as f64 * x / s.period;
            total += s.harmonic(n) * num_complex::Complex64::from_polar(1.0, phase);
        }
        assert!(total.im.abs() <= 1e-12 * s.harmonic(0).re);
        assert!((total.re - v).abs() <= 1e-12 * s.harmonic(0).re);
    }
    let vis = s.visibility().unwrap();
    assert!((vis - 0.3036).abs() < 5e-4, "KDTL QM visibility {vis}");
}

#[test]
fn doubling_the_harmonic_cutoff_changes_nothing() {
    let base = near_setup();
    let coarse = TalbotPrepared::new(&TalbotSetup { harmonics: 4, ..base.clone() }).unwrap();
    let fine = TalbotPrepared::new(&TalbotSetup { harmonics: 2 * coarse.n_max(), ..base }).unwrap();
    let spec = csl_spec(10.0, 1e-7);
    let (a, b) = (coarse.signal(&spec).unwrap(), fine.signal(&spec).unwrap());
    let scale = b.harmonic(0).re;
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-9 * scale);
    }
}

#[test]
fn ccsl_talbot_signal_equals_csl() {
    let prep = TalbotPrepared::new(&near_setup()).unwrap();
    let csl = prep.signal(&csl_spec(5.0, 1e-7)).unwrap();
    let ccsl = prep
        .signal(&CollapseSpec::Ccsl(CcslParams { lambda_eff: 5.0, r_c: 1e-7, tau_bar: 1e-14 }))
        .unwrap();
    assert_eq!(csl, ccsl);
}

#[test]
fn collapse_lowers_talbot_visibility() {
    let prep = TalbotPrepared::new(&TalbotSetup {
        velocity: VelocityProfile::Delta { velocity: 85.0 },
        ..near_setup()
    })
    .unwrap();
    let mut prev = prep.signal(&CollapseSpec::Qm).unwrap().visibility().unwrap();
    for lambda in [1.0, 10.0, 100.0] {
        let v = prep.signal(&csl_spec(lambda, 1e-7)).unwrap().visibility().unwrap();
        assert!(v < prev);
        prev = v;
    }
}
