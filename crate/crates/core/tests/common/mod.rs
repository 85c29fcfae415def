//! Acceptance checks shared by the acceptance runner and the focused
//! integration tests. Each check returns a verdict with a short detail line;
//! tolerances are the ones the checks are defined with.

#![allow(dead_code)]

use collapse_bounds::amplification::{
    lambda_adler, lambda_disk, lambda_lattice, dp_base_rate, LatticeHistogram, ModelFamily, MoleculeModel,
    DEFAULT_SITE_CAP,
};
use collapse_bounds::cli::{self, run_scan};
use collapse_bounds::collapse::{
    d_ccsl, d_csl, d_dcsl, d_dcsl_boosted, temperature_for_kt, BeamGeometry, CcslParams, CollapseSpec, CslParams,
    DcslBoostedParams, DcslParams,
};
use collapse_bounds::config::{farfield_2012, kdtl_2013, ModelName, RunConfig};
use collapse_bounds::constants::{AMU, M0};
use collapse_bounds::farfield::{paraxial_window, pattern_single_v, FarFieldGrid};
use collapse_bounds::fitkit::log_grid;
use collapse_bounds::localization::{csl_min_lambda, localization_bound, LocalizationScenario};
use collapse_bounds::optics::MechanicalGrating;
use collapse_bounds::special::{self, FftDirection};
use collapse_oracle as oracle;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub budget: Duration,
    pub run: fn() -> Verdict,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "D-function asymptote", budget: Duration::from_secs(1), run: asymptote },
    Criterion { id: 2, name: "reduction chain", budget: Duration::from_secs(10), run: reduction_chain },
    Criterion { id: 3, name: "DP base rate", budget: Duration::from_secs(1), run: dp_rate },
    Criterion { id: 4, name: "amplification consistency", budget: Duration::from_secs(30), run: amplification },
    Criterion { id: 5, name: "far-field oracle equivalence", budget: Duration::from_secs(60), run: farfield_oracle },
    Criterion { id: 6, name: "paraxial window", budget: Duration::from_secs(1), run: paraxial },
    Criterion { id: 7, name: "near/far bound ratio", budget: Duration::from_secs(600), run: bound_ratio },
    Criterion { id: 8, name: "localization border", budget: Duration::from_secs(60), run: localization },
    Criterion { id: 9, name: "determinism", budget: Duration::from_secs(120), run: determinism },
    Criterion { id: 10, name: "special-function oracle suite", budget: Duration::from_secs(30), run: special_suite },
];

/// Runs a criterion and folds the runtime budget into the verdict.
pub fn evaluate(c: &Criterion) -> (Verdict, Duration) {
    let t = Instant::now();
    let mut v = (c.run)();
    let took = t.elapsed();
    if took > c.budget {
        v.pass = false;
        v.detail.push_str(&format!("; over the {:?} budget", c.budget));
    }
    (v, took)
}

/// Far-field preset geometry at the mean velocity.
pub fn far_geometry() -> BeamGeometry {
    farfield_2012().mean_geometry().unwrap()
}

pub fn csl_spec(lambda_eff: f64, r_c: f64) -> CollapseSpec {
    CollapseSpec::Csl(CslParams { lambda_eff, r_c })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

pub fn asymptote() -> Verdict {
    let geom = far_geometry();
    let lambda = 1.0 / geom.total_time();
    let target = (-1.0f64).exp();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for r_c in [1e-9, 1e-7, 1e-5] {
        let specs = [
            csl_spec(lambda, r_c),
            CollapseSpec::Ccsl(CcslParams { lambda_eff: lambda, r_c, tau_bar: 1e-14 }),
            CollapseSpec::Dcsl(DcslParams { lambda_eff: lambda, r_c, temperature: 1.0 }),
            CollapseSpec::DcslBoosted(DcslBoostedParams {
                lambda_eff: lambda,
                r_c,
                temperature: 1.0,
                boost: 10.0,
            }),
        ];
        for s in &specs {
            let d = s.damping(1e6 * r_c, &geom).unwrap();
            worst = worst.max((d - target).abs());
            count += 1;
        }
    }
    Verdict {
        pass: worst <= 1e-6,
        detail: format!("max |D(1e6 r_C) - 1/e| = {worst:.2e} over {count} (model, r_C) pairs (tol 1e-6)"),
    }
}

pub fn reduction_chain() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mass = 514.0 * AMU;
    let (mut boost_gap, mut kt_gap): (f64, f64) = (0.0, 0.0);
    let mut ccsl_exact = true;
    for _ in 0..1000 {
        let q = log_uniform(&mut rng, 1e-10, 1e-4);
        let r_c = log_uniform(&mut rng, 1e-9, 1e-4);
        let t = log_uniform(&mut rng, 1e-4, 1e-1);
        let lambda_eff = log_uniform(&mut rng, 1e-2, 1e2) / t;
        let geom = BeamGeometry::new(0.5 * t, 0.5 * t, mass, 1.0).unwrap();
        let temperature = log_uniform(&mut rng, 1e-3, 1e3);

        let dcsl = DcslParams { lambda_eff, r_c, temperature };
        let boosted = DcslBoostedParams { lambda_eff, r_c, temperature, boost: 1e-30 };
        boost_gap = boost_gap.max(rel(d_dcsl_boosted(q, &boosted, &geom), d_dcsl(q, &dcsl, &geom)));

        let csl = CslParams { lambda_eff, r_c };
        let hot = DcslParams { temperature: temperature_for_kt(1e-16, mass, r_c), ..dcsl };
        kt_gap = kt_gap.max(rel(d_dcsl(q, &hot, &geom), d_csl(q, &csl, &geom)));

        let tau_bar = log_uniform(&mut rng, 1e-16, 1e-13);
        let ccsl = CcslParams { lambda_eff, r_c, tau_bar };
        ccsl_exact &= d_ccsl(q, &ccsl, &geom).to_bits() == d_csl(q, &csl, &geom).to_bits();
    }
    Verdict {
        pass: boost_gap <= 1e-12 && kt_gap <= 1e-12 && ccsl_exact,
        detail: format!(
            "boost->0 gap {boost_gap:.1e}, k_T->0 gap {kt_gap:.1e}, cCSL==CSL bitwise: {ccsl_exact} (tol 1e-12)"
        ),
    }
}

pub fn dp_rate() -> Verdict {
    let a = dp_base_rate(1e-15).unwrap();
    let b = dp_base_rate(1e-7).unwrap();
    let pass = (a / 1e-15 - 1.0).abs() <= 0.05 && (b / 1e-23 - 1.0).abs() <= 0.05;
    Verdict {
        pass,
        detail: format!("R0=1e-15: {a:.4e} /s, R0=1e-7: {b:.4e} /s (tol 5%)"),
    }
}

pub fn amplification() -> Verdict {
    let mol = MoleculeModel::planar(100.0, 12.0 * AMU);
    let grid = log_grid(1e-11, 1e-6, 51);
    let factor = |a: f64, b: f64| (a / b).max(b / a);
    let mut adler_worst: (f64, f64) = (1.0, 0.0);
    let mut disk_worst: f64 = 1.0;
    for &r_c in &grid {
        let lat = lambda_lattice(&mol, 1.0, r_c).unwrap();
        let f = factor(lambda_adler(&mol, 1.0, r_c).unwrap(), lat);
        if f > adler_worst.0 {
            adler_worst = (f, r_c);
        }
        if r_c >= mol.atomic_radius {
            disk_worst = disk_worst.max(factor(lambda_disk(&mol, 1.0, r_c), lat));
        }
    }
    let m2 = (mol.atomic_mass / M0).powi(2);
    let n = mol.n_atoms;
    let sites = LatticeHistogram::new(&mol, DEFAULT_SITE_CAP).unwrap().site_count() as f64;
    let limits = [
        rel(lambda_adler(&mol, 1.0, 1e-12).unwrap(), n * m2),
        rel(lambda_adler(&mol, 1.0, 1e-4).unwrap(), n * n * m2),
        rel(lambda_lattice(&mol, 1.0, 1e-13).unwrap(), sites * m2),
        rel(lambda_lattice(&mol, 1.0, 1e-4).unwrap(), sites * sites * m2),
        rel(lambda_disk(&mol, 1.0, 1e-4), n * n * m2),
    ];
    let limit_worst = limits.iter().cloned().fold(0.0, f64::max);
    Verdict {
        pass: adler_worst.0 <= 2.0 && disk_worst <= 2.0 && limit_worst <= 0.05,
        detail: format!(
            "Adler/lattice worst factor {:.2} at r_C={:.2e} (tol 2); disk/lattice above r_a {:.2}; limits worst {:.1e} (tol 5%)",
            adler_worst.0, adler_worst.1, disk_worst, limit_worst
        ),
    }
}

/// Relative L-infinity gap between the FFT pattern and direct quadrature.
pub fn farfield_gap(slits: u32, spec: &CollapseSpec) -> f64 {
    let geom = far_geometry();
    let grating = MechanicalGrating {
        period: 100e-9,
        slit_width: 79e-9,
        effective_slit_width: 43e-9,
        slits: Some(slits),
    };
    let source_width = 1e-6;
    let grid = FarFieldGrid {
        points: 16384,
        q_half_width: None,
        x_half_width: 300e-6,
    };
    let fft = pattern_single_v(&grating, &geom, spec, source_width, grid).unwrap();
    let damping = |q: f64| spec.damping(q, &geom).unwrap();
    let direct = oracle::FarFieldDirect {
        slits: grating.slit_intervals(),
        k: geom.wavenumber(),
        l1: geom.l1,
        l2: geom.l2,
        source_width,
        damping: &damping,
        nodes: 40,
    };
    let reference: Vec<f64> = fft.x.iter().map(|&x| direct.pattern(x)).collect();
    let scale = reference.iter().cloned().fold(0.0, f64::max);
    fft.values
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

pub fn farfield_oracle() -> Verdict {
    let specs = [CollapseSpec::Qm, csl_spec(3e3, 1e-7)];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for n in [1, 2, 4] {
        for s in &specs {
            let g = farfield_gap(n, s);
            worst = worst.max(g);
            parts.push(format!("N={n} {}: {g:.1e}", s.name()));
        }
    }
    Verdict {
        pass: worst <= 1e-6,
        detail: format!("rel L-inf {} (tol 1e-6)", parts.join(", ")),
    }
}

pub fn paraxial() -> Verdict {
    let cfg = farfield_2012();
    let f = cfg.farfield.as_ref().unwrap();
    let window = paraxial_window(&cfg.mean_geometry().unwrap(), f.source_x_m, f.source_y_m);
    match window {
        None => Verdict {
            pass: false,
            detail: "no admissible sigma1".into(),
        },
        Some((lo, hi)) => {
            let (dl, dh) = (rel(lo, 4e-9), rel(hi, 7e-8));
            Verdict {
                pass: dl <= 0.3 && dh <= 0.3,
                detail: format!(
                    "window [{lo:.4e}, {hi:.4e}] m vs [4e-9, 7e-8]: endpoint deviations {:.0}% and {:.0}% (tol 30%)",
                    100.0 * dl,
                    100.0 * dh
                ),
            }
        }
    }
}

/// CSL lambda boundary at the r_C column closest to `r_c`.
pub fn boundary_at(mut cfg: RunConfig, r_c: f64) -> Option<f64> {
    cfg.model.family = ModelName::Csl;
    let run = run_scan(&cfg, None).unwrap();
    let entry = run
        .boundary
        .iter()
        .min_by(|a, b| (a.r_c / r_c).ln().abs().total_cmp(&(b.r_c / r_c).ln().abs()))
        .unwrap();
    entry.boundary.lambda()
}

pub fn bound_ratio() -> Verdict {
    let far = boundary_at(farfield_2012(), 1e-7);
    let near = boundary_at(kdtl_2013(), 1e-7);
    match (far, near) {
        (Some(f), Some(k)) => {
            let ratio = f / k;
            Verdict {
                pass: (30.0..=300.0).contains(&ratio),
                detail: format!("lambda bound far {f:.3e}, KDTL {k:.3e}: ratio far/KDTL {ratio:.3} (want [30, 300])"),
            }
        }
        _ => Verdict {
            pass: false,
            detail: format!("open boundary column: far {far:?}, KDTL {near:?}"),
        },
    }
}

pub fn localization() -> Verdict {
    let sc = LocalizationScenario::default();
    let lambda = csl_min_lambda(1e-7, &sc).unwrap();
    let decades = (lambda / 1e-16).log10().abs();
    let grid = log_grid(1e-15, 1e-4, 45);
    let dp = localization_bound(ModelFamily::Dp, &sc, &grid).unwrap();
    let localizing = dp.iter().filter(|p| p.localizes == Some(true)).count();
    Verdict {
        pass: decades <= 1.0 && localizing == 0,
        detail: format!(
            "CSL lambda_min(1e-7 m) = {lambda:.3e} /s ({decades:.2} decades from 1e-16, tol 1); DP localizes at {localizing} of {} R0",
            dp.len()
        ),
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

pub fn determinism() -> Verdict {
    let mut checked = 0;
    let mut mismatched = Vec::new();
    for (name, base) in [("farfield-2012", farfield_2012()), ("kdtl-2013", kdtl_2013())] {
        let mut cfg = base;
        cfg.model.family = ModelName::Csl;
        cfg.model.lambda_per_s = Some(1e-8);
        cfg.model.r_c_m = Some(1e-7);
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                cfg.out_dir = Some(dir.path().to_path_buf());
                cli::simulate(&cfg).unwrap();
                dir_bytes(dir.path())
            })
            .collect();
        for (a, b) in runs[0].iter().zip(&runs[1]) {
            checked += 1;
            if a != b {
                mismatched.push(format!("{name}/{}", a.0));
            }
        }
        if runs[0].len() != runs[1].len() {
            mismatched.push(format!("{name}: file sets differ"));
        }
    }
    Verdict {
        pass: mismatched.is_empty() && checked > 0,
        detail: format!("{checked} simulate outputs compared byte by byte; mismatches: {mismatched:?}"),
    }
}

/// |a - b| / max(|b|, floor); functions with zeros are measured against a
/// floor tied to their envelope.
fn gap(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// 1 - 2F2(1/2,1/2;3/2,3/2;-y^2) = int_0^inf s e^-s (1 - exp(-y^2 e^-2s)) ds.
fn oracle_dp_bracket(y: f64) -> f64 {
    oracle::simpson(&|s: f64| -s * (-s).exp() * (-y * y * (-2.0 * s).exp()).exp_m1(), 0.0, 50.0, 1e-18)
}

/// 1 - (sqrt(pi)/2) erf(x)/x = int_0^1 (1 - exp(-x^2 s^2)) ds.
fn oracle_erf_bracket(x: f64) -> f64 {
    oracle::simpson(&|s: f64| -(-x * x * s * s).exp_m1(), 0.0, 1.0, 1e-18)
}

/// Worst gap per special function over 1000 seeded inputs each.
pub fn special_gaps() -> Vec<(&'static str, f64)> {
    let n = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let r = &mut rng;
    let mut out = Vec::new();
    let mut worst = |name: &'static str, f: &mut dyn FnMut(&mut ChaCha8Rng) -> f64, rng: &mut ChaCha8Rng| {
        let w = (0..n).map(|_| f(rng)).fold(0.0, f64::max);
        out.push((name, w));
    };
    worst("erf", &mut |r| {
        let x = r.gen_range(-6.0..6.0);
        gap(special::erf(x), oracle::erf(x), 0.0)
    }, r);
    worst("erfc", &mut |r| {
        let x = r.gen_range(-3.0..1.5);
        gap(special::erfc(x), 1.0 - oracle::erf(x), 0.0)
    }, r);
    worst("sinc", &mut |r| {
        let u: f64 = r.gen_range(-10.0..10.0);
        // sin(u)/u = int_0^1 cos(u t) dt.
        let reference = if u.abs() <= 3.0 {
            oracle::sinc_taylor(u)
        } else {
            oracle::simpson(&|t: f64| (u * t).cos(), 0.0, 1.0, 1e-17)
        };
        gap(special::sinc(u), reference, 1e-3)
    }, r);
    worst("one_minus_erf_ratio", &mut |r| {
        let x = log_uniform(r, 1e-3, 30.0);
        gap(special::one_minus_erf_ratio(x), oracle_erf_bracket(x), 0.0)
    }, r);
    worst("hyp2f2 series range", &mut |r| {
        let z = r.gen_range(-4.0..40.0);
        gap(special::hyp2f2_halves(z).unwrap(), oracle::hyp2f2_series(z), 0.0)
    }, r);
    worst("hyp2f2 z < -4", &mut |r| {
        let z = -log_uniform(r, 4.0, 1e4);
        gap(special::hyp2f2_halves(z).unwrap(), oracle::hyp2f2_halves(z), 0.0)
    }, r);
    worst("dp_bracket", &mut |r| {
        let y = log_uniform(r, 1e-3, 100.0);
        gap(special::dp_bracket(y), oracle_dp_bracket(y), 0.0)
    }, r);
    worst("gaussian_cos_integral", &mut |r| {
        let (x, a) = (r.gen_range(0.0..6.0), r.gen_range(0.0..6.0));
        gap(special::gaussian_cos_integral(x, a), oracle::gaussian_cos_integral(x, a), 1e-3)
    }, r);
    worst("one_minus_cos_ratio", &mut |r| {
        let (x, a) = (r.gen_range(0.5..6.0), r.gen_range(0.0..6.0));
        let reference = 1.0 - oracle::gaussian_cos_integral(x, a) / x;
        gap(special::one_minus_cos_ratio(x, a), reference, 0.0)
    }, r);
    worst("bessel_j1 (series)", &mut |r| {
        let x = r.gen_range(-12.0..12.0);
        gap(special::bessel_j1(x), oracle::bessel_j1_series(x), 1e-3)
    }, r);
    worst("bessel_j1 (integral)", &mut |r| {
        let x = r.gen_range(-40.0..40.0);
        gap(special::bessel_j1(x), oracle::bessel_j1_integral(x), 1e-3)
    }, r);
    worst("bessel_i_complex |z|<=8", &mut |r| {
        let n = r.gen_range(0..=24u32);
        let z = Complex64::from_polar(r.gen_range(0.0..8.0), r.gen_range(-PI..PI));
        let (a, b) = (special::bessel_i_complex(n as i32, z).unwrap(), oracle::bessel_i_series(n, z));
        (a - b).norm() / b.norm()
    }, r);
    worst("bessel_i_complex 8<|z|<=20", &mut |r| {
        let n = r.gen_range(0..=20u32);
        let z = Complex64::from_polar(r.gen_range(8.0..20.0), r.gen_range(-PI..PI));
        let (a, b) = (special::bessel_i_complex(n as i32, z).unwrap(), oracle::bessel_i_integral(n, z));
        (a - b).norm() / b.norm().max(1e-3 * z.re.abs().exp())
    }, r);
    worst("fft_complex", &mut |r| {
        let len = 1usize << r.gen_range(1..=8);
        let x: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let inverse = r.gen_bool(0.5);
        let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
        let a = special::fft_complex(&x, dir).unwrap();
        let b = oracle::dft(&x, inverse);
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
        a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max) / scale
    }, r);
    out
}

pub fn special_suite() -> Verdict {
    let gaps = special_gaps();
    let failing: Vec<String> = gaps
        .iter()
        .filter(|(_, g)| !(*g <= 1e-10))
        .map(|(n, g)| format!("{n} {g:.1e}"))
        .collect();
    let worst = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    Verdict {
        pass: failing.is_empty(),
        detail: format!(
            "{} functions x 1000 inputs, worst gap {worst:.1e} (tol 1e-10){}",
            gaps.len(),
            if failing.is_empty() { String::new() } else { format!("; failing: {}", failing.join(", ")) }
        ),
    }
}
