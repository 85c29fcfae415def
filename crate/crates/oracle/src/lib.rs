//! Slow, direct reference computations. Nothing here is tuned for speed;
//! each routine takes the most literal route to its value so that the
//! production code can be checked against it.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Adaptive Simpson quadrature with Richardson correction on 16 equal
/// panels, so that a narrow peak cannot hide between the first samples.
/// The absolute tolerance is raised to 1e-15 of int |f| where it would ask
/// for accuracy below rounding.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let abs_scale = (0..4 * PANELS)
        .map(|i| f(a + (i as f64 + 0.5) * h / 4.0).abs())
        .sum::<f64>()
        * h
        / 4.0;
    let tol = tol.max(1e-15 * abs_scale) / PANELS as f64;
    (0..PANELS)
        .map(|p| {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == PANELS { b } else { lo + h };
            let (fa, fb) = (f(lo), f(hi));
            let fm = f(0.5 * (lo + hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_rec(f, lo, hi, fa, fm, fb, whole, tol, 50)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Stop at the tolerance or once the refinement is pure rounding noise.
    let noise = 8.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= noise {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// erf by quadrature of (2/sqrt(pi)) exp(-t^2).
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let v = simpson(&|t: f64| (-t * t).exp(), 0.0, x.abs(), 1e-17);
    x.signum() * 2.0 / PI.sqrt() * v
}

/// sin(u)/u by its Taylor series (intended for |u| <= 10).
pub fn sinc_taylor(u: f64) -> f64 {
    let u2 = u * u;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -u2 / ((2 * k) as f64 * (2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-20 {
            break;
        }
    }
    sum
}

/// 2F2(1/2,1/2;3/2,3/2;z) = int_0^1 int_0^1 exp(z u^2 v^2) du dv. With
/// w = uv the double integral is int_0^1 exp(z w^2)(-ln w) dw, and w = e^-s
/// removes the log singularity: int_0^inf s exp(-s) exp(z e^-2s) ds.
pub fn hyp2f2_halves(z: f64) -> f64 {
    simpson(&|s: f64| s * (-s).exp() * (z * (-2.0 * s).exp()).exp(), 0.0, 50.0, 1e-17)
}

/// The series sum_k (1/(1+2k))^2 z^k/k!, summed until terms drop below 1e-14.
pub fn hyp2f2_series(z: f64) -> f64 {
    let mut pow = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        pow *= z / k as f64;
        let d = (2 * k + 1) as f64;
        let t = pow / (d * d);
        sum += t;
        if t.abs() < 1e-14 * 1e-3 {
            break;
        }
    }
    sum
}

/// int_0^X exp(-tau^2) cos(2 a tau) d tau by adaptive Simpson.
pub fn gaussian_cos_integral(x: f64, a: f64) -> f64 {
    simpson(&|t: f64| (-t * t).exp() * (2.0 * a * t).cos(), 0.0, x, 1e-16)
}

/// J_1 by its ascending series (accurate for |x| <= 12).
pub fn bessel_j1_series(x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h;
    let mut sum = h;
    for k in 1..200 {
        term *= -h * h / (k as f64 * (k + 1) as f64);
        sum += term;
        if term.abs() < 1e-22 {
            break;
        }
    }
    sum
}

/// J_1 by its integral representation (1/pi) int_0^pi cos(theta - x sin theta).
pub fn bessel_j1_integral(x: f64) -> f64 {
    simpson(&|t: f64| (t - x * t.sin()).cos(), 0.0, PI, 1e-15) / PI
}

/// I_n(z) by the power series (z/2)^n sum_k (z^2/4)^k / (k! (n+k)!).
pub fn bessel_i_series(n: u32, z: Complex64) -> Complex64 {
    let h = z * 0.5;
    let mut lead = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        lead = lead * h / k as f64;
    }
    let q = h * h;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..400 {
        term = term * q / (k as f64 * (n + k) as f64);
        sum += term;
        if term.norm() < 1e-20 * sum.norm().max(1e-300) {
            break;
        }
    }
    lead * sum
}

/// I_n(z) by the integral (1/pi) int_0^pi exp(z cos t) cos(n t) dt. The
/// integrand is even and 2 pi periodic, so the trapezoid rule on 1024
/// intervals converges geometrically (|z| + n well below 1024).
pub fn bessel_i_integral(n: u32, z: Complex64) -> Complex64 {
    let m = 1024;
    let h = PI / m as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..=m {
        let t = j as f64 * h;
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        s += (z * t.cos()).exp() * (n as f64 * t).cos() * w;
    }
    s * h / PI
}

/// O(N^2) discrete Fourier transform, forward sign exp(-2 pi i jk/N).
pub fn dft(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                let ang = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                s += v * Complex64::from_polar(1.0, ang);
            }
            if inverse {
                s / n as f64
            } else {
                s
            }
        })
        .collect()
}

/// Gauss-Legendre nodes on [-1,1] via Newton iteration on P_n.
pub fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Far-field pattern by direct double quadrature over the two grating-plane
/// coordinates, slit by slit:
///
/// p(x) = sum_{j,j'} int_j int_j' D(x2-x2') sinc(k (x2-x2') s/(2 L1))
///        exp(-i k (x2-x2') x/L2) exp(i k (x2^2-x2'^2)(1/(2L1)+1/(2L2))).
pub struct FarFieldDirect<'a> {
    pub slits: Vec<(f64, f64)>,
    pub k: f64,
    pub l1: f64,
    pub l2: f64,
    pub source_width: f64,
    pub damping: &'a dyn Fn(f64) -> f64,
    pub nodes: usize,
}

impl FarFieldDirect<'_> {
    pub fn pattern(&self, x: f64) -> f64 {
        let gl = legendre_nodes(self.nodes);
        let kappa = self.k * (1.0 / (2.0 * self.l1) + 1.0 / (2.0 * self.l2));
        let pts: Vec<Vec<(f64, f64)>> = self
            .slits
            .iter()
            .map(|&(lo, hi)| {
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo);
                gl.iter().map(|&(t, w)| (c + h * t, w * h)).collect()
            })
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for a in &pts {
            for b in &pts {
                for &(x2, w2) in a {
                    for &(y2, v2) in b {
                        let q = x2 - y2;
                        let s_arg = self.k * q * self.source_width / (2.0 * self.l1);
                        let sinc = if s_arg == 0.0 { 1.0 } else { s_arg.sin() / s_arg };
                        let phase = -self.k * q * x / self.l2 + kappa * (x2 * x2 - y2 * y2);
                        total += Complex64::from_polar(w2 * v2 * (self.damping)(q) * sinc, phase);
                    }
                }
            }
        }
        total.re
    }
}

/// Naive lattice pair sum sum_{i,j} exp(-|r_i - r_j|^2 / (4 r_C^2)).
pub fn lattice_pair_sum(sites: &[(f64, f64)], r_c: f64) -> f64 {
    let mut s = 0.0;
    for a in sites {
        for b in sites {
            let d2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
            s += (-d2 / (4.0 * r_c * r_c)).exp();
        }
    }
    s
}
