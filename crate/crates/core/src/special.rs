//! Special functions and the FFT used by the propagation code.

use crate::constants::SQRT_PI_2;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::OnceLock;

pub type ComplexSample = Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Error function (libm backed).
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function (libm backed).
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Unnormalized sinc, sin(u)/u.
pub fn sinc(u: f64) -> f64 {
    let a = u.abs();
    if a < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 * (1.0 - u2 / 20.0)
    } else {
        u.sin() / u
    }
}

/// (sqrt(pi)/2) erf(x)/x, equal to 1 at x = 0.
pub fn erf_ratio(x: f64) -> f64 {
    1.0 - one_minus_erf_ratio(x)
}

/// 1 - (sqrt(pi)/2) erf(x)/x without cancellation near x = 0.
///
/// This is the Gaussian-kernel bracket of the CSL D-function.
pub fn one_minus_erf_ratio(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 {
        // sum_{k>=1} (-1)^{k+1} x^{2k} / (k! (2k+1))
        let x2 = a * a;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= -x2 / kf;
            let t = -term / (2.0 * kf + 1.0);
            sum += t;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else if a.is_infinite() {
        1.0
    } else {
        1.0 - SQRT_PI_2 * erf(a) / a
    }
}

/// Generalized hypergeometric 2F2(1/2, 1/2; 3/2, 3/2; z).
///
/// Series for -4 <= z <= 40, and for z < -4 the exact representation
/// (sqrt(pi)/2x)(ln 2x + gamma/2 + int_x^inf erfc(s)/s ds) with x = sqrt(-z).
pub fn hyp2f2_halves(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("2F2 argument {z} is not finite")));
    }
    if z > 40.0 {
        return Err(Error::Domain(format!(
            "2F2 argument {z} > 40 is outside the supported range"
        )));
    }
    if z >= -4.0 {
        Ok(1.0 + hyp2f2_series_tail(z))
    } else {
        let x = (-z).sqrt();
        Ok(SQRT_PI_2 / x * (log_sum(x) + erfc_over_s_tail(x)))
    }
}

/// 1 - 2F2(1/2,1/2;3/2,3/2; -y^2), the DP-kernel bracket, without
/// cancellation at small y.
pub fn dp_bracket(y: f64) -> f64 {
    let y = y.abs();
    if y <= 2.0 {
        -hyp2f2_series_tail(-y * y)
    } else if y.is_infinite() {
        1.0
    } else {
        1.0 - SQRT_PI_2 / y * (log_sum(y) + erfc_over_s_tail(y))
    }
}

fn log_sum(x: f64) -> f64 {
    (2.0 * x).ln() + 0.5 * EULER_GAMMA
}

/// sum_{k>=1} z^k / (k! (2k+1)^2).
fn hyp2f2_series_tail(z: f64) -> f64 {
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 1..400 {
        let kf = k as f64;
        pow *= z / kf;
        let d = 2.0 * kf + 1.0;
        let t = pow / (d * d);
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(20))
}

/// int_x^inf erfc(s)/s ds for x >= 2.
fn erfc_over_s_tail(x: f64) -> f64 {
    let upper = (x * x + 60.0).sqrt();
    let nodes = gl20();
    let panels = 4;
    let h = (upper - x) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = x + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (t, w) in nodes.0.iter().zip(&nodes.1) {
            let u = c + 0.5 * h * t;
            s += w * erfc(u) / u;
        }
        sum += 0.5 * h * s;
    }
    sum
}

/// Point past which exp(-tau^2) is negligible against 1 in double precision.
const GAUSS_CUTOFF: f64 = 6.5;

fn cos_panels(upper: f64, a: f64) -> usize {
    let width = if a == 0.0 { 0.5 } else { (PI / (2.0 * a.abs())).min(0.5) };
    ((upper / width).ceil() as usize).max(1)
}

/// int_0^X exp(-tau^2) cos(2 a tau) d tau. Odd in X, even in a.
pub fn gaussian_cos_integral(x_upper: f64, a: f64) -> f64 {
    if x_upper < 0.0 {
        return -gaussian_cos_integral(-x_upper, a);
    }
    if a == 0.0 {
        return SQRT_PI_2 * erf(x_upper);
    }
    let upper = x_upper.min(GAUSS_CUTOFF);
    if upper == 0.0 {
        return 0.0;
    }
    let nodes = gl20();
    let panels = cos_panels(upper, a);
    let h = upper / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (t, w) in nodes.0.iter().zip(&nodes.1) {
            let tau = c + 0.5 * h * t;
            s += w * (-tau * tau).exp() * (2.0 * a * tau).cos();
        }
        sum += 0.5 * h * s;
    }
    sum
}

/// 1 - gaussian_cos_integral(X, a)/X, evaluated without cancellation
/// (equals `one_minus_erf_ratio(X)` when a = 0).
pub fn one_minus_cos_ratio(x_upper: f64, a: f64) -> f64 {
    let x_abs = x_upper.abs();
    if a == 0.0 {
        return one_minus_erf_ratio(x_abs);
    }
    if x_abs == 0.0 {
        return 0.0;
    }
    // (1/X) int_0^X [1 - exp(-tau^2) cos(2 a tau)] d tau with the integrand
    // written as -expm1(-tau^2) + 2 exp(-tau^2) sin^2(a tau).
    let upper = x_abs.min(GAUSS_CUTOFF);
    let nodes = gl20();
    let panels = cos_panels(upper, a);
    let h = upper / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (t, w) in nodes.0.iter().zip(&nodes.1) {
            let tau = c + 0.5 * h * t;
            let sn = (a * tau).sin();
            s += w * (-(-tau * tau).exp_m1() + 2.0 * (-tau * tau).exp() * sn * sn);
        }
        sum += 0.5 * h * s;
    }
    (sum + (x_abs - upper)) / x_abs
}

/// Bessel function of the first kind, order one (libm backed).
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Largest |z| accepted by the modified Bessel routines.
pub const BESSEL_Z_MAX: f64 = 50.0;

/// Modified Bessel functions I_0(z) ..= I_{n_max}(z) for complex z, by
/// Miller's backward recurrence normalized with sum_k I_k(z) = e^z.
pub fn bessel_i_sequence(n_max: usize, z: Complex64) -> Result<Vec<Complex64>> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > BESSEL_Z_MAX {
        return Err(Error::Range(format!(
            "|z| = {} exceeds the modified Bessel range {BESSEL_Z_MAX}",
            z.norm()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; n_max + 1];
    if z.norm() == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return Ok(out);
    }
    // I_n(-z) = (-1)^n I_n(z): recur with Re z >= 0 so the normalization
    // sum has no cancellation.
    let flip = z.re < 0.0;
    let w = if flip { -z } else { z };
    let start = 2 * (n_max.max(w.norm().ceil() as usize) + 20);
    let two_over_w = 2.0 / w;
    let mut f_next = zero;
    let mut f_cur = Complex64::new(1e-30, 0.0);
    let mut sum = zero;
    let mut vals = vec![zero; n_max + 1];
    for k in (1..=start).rev() {
        let f_prev = f_next + two_over_w * (k as f64) * f_cur;
        f_next = f_cur;
        f_cur = f_prev;
        // f_cur now holds order k-1, f_next order k.
        let order = k - 1;
        if order <= n_max {
            vals[order] = f_cur;
        }
        sum += if order == 0 { f_cur } else { 2.0 * f_cur };
        let mag = f_cur.norm();
        // Kept well below sqrt(f64::MAX): complex division squares the divisor.
        if mag > 1e100 {
            let s = 1.0 / mag;
            f_cur *= s;
            f_next *= s;
            sum *= s;
            for v in vals.iter_mut() {
                *v *= s;
            }
        }
    }
    let norm = w.exp() / sum;
    for (n, v) in vals.iter().enumerate() {
        let mut val = v * norm;
        if flip && n % 2 == 1 {
            val = -val;
        }
        if !(val.re.is_finite() && val.im.is_finite()) {
            return Err(Error::Range(format!("I_{n}({z}) overflowed")));
        }
        out[n] = val;
    }
    Ok(out)
}

/// Modified Bessel function I_n(z) for integer order and complex argument.
pub fn bessel_i_complex(order: i32, z: Complex64) -> Result<Complex64> {
    let n = order.unsigned_abs() as usize;
    Ok(bessel_i_sequence(n, z)?[n])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftDirection {
    Forward,
    Inverse,
}

/// Discrete Fourier transform of a power-of-two length sequence (rustfft
/// backed). Forward uses exp(-2 pi i jk/N) and no scaling; inverse scales by 1/N.
pub fn fft_complex(samples: &[Complex64], direction: FftDirection) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Usage(format!(
            "FFT length {n} is not a power of two; resample first"
        )));
    }
    let mut buf = samples.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    match direction {
        FftDirection::Forward => planner.plan_fft_forward(n).process(&mut buf),
        FftDirection::Inverse => {
            planner.plan_fft_inverse(n).process(&mut buf);
            let s = 1.0 / n as f64;
            for v in buf.iter_mut() {
                *v *= s;
            }
        }
    }
    Ok(buf)
}
