//! Complex special functions used by the models and the Mellin oracles.
//!
//! The error function is built on the Faddeeva function
//! `w(z) = exp(-z^2) erfc(-iz)`, evaluated with the Gautschi / Poppe-Wijers
//! algorithm (about 14 significant digits everywhere in the plane). Near the
//! origin the Maclaurin series of `erf` is used instead, which avoids the
//! cancellation in `1 - exp(-z^2) w(iz)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest |Im z| for which `complex_erf` promises its stated accuracy.
pub const ERF_IM_ENVELOPE: f64 = 30.0;

/// Faddeeva function `w(z) = exp(-z^2) erfc(-iz)`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let (xi, yi) = (z.re, z.im);
    let xabs = xi.abs();
    let yabs = yi.abs();
    let x = xabs / 6.3;
    let y = yabs / 4.4;

    let mut qrho = x * x + y * y;
    let mut xquad = xabs * xabs - yabs * yabs;
    let yquad = 2.0 * xabs * yabs;
    let small = qrho < 0.085_264;

    let (mut u, mut v);
    let (mut u2, mut v2) = (0.0, 0.0);

    if small {
        // Power series for exp(z^2) erfc(z) scaled back.
        qrho = (1.0 - 0.85 * y) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as usize;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let xaux = (xsum * xquad - ysum * yquad) / i as f64;
            ysum = (xsum * yquad + ysum * xquad) / i as f64;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs);
        let daux = (-xquad).exp();
        u2 = daux * yquad.cos();
        v2 = -daux * yquad.sin();
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        // Laplace continued fraction, accelerated by a truncated Taylor
        // expansion inside the unit ellipse.
        let (h, kapn, nu);
        if qrho > 1.0 {
            h = 0.0;
            kapn = 0usize;
            qrho = qrho.sqrt();
            nu = (3.0 + 1442.0 / (26.0 * qrho + 77.0)) as usize;
        } else {
            qrho = (1.0 - y) * (1.0 - qrho).sqrt();
            h = 1.88 * qrho;
            kapn = (7.0 + 34.0 * qrho).round() as usize;
            nu = (16.0 + 26.0 * qrho).round() as usize;
        }
        let h2 = 2.0 * h;
        let accelerate = h > 0.0;
        let mut qlambda = if accelerate { h2.powi(kapn as i32) } else { 0.0 };

        let (mut rx, mut ry, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if accelerate && n <= kapn {
                let tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        if h == 0.0 {
            u = TWO_OVER_SQRT_PI * rx;
            v = TWO_OVER_SQRT_PI * ry;
        } else {
            u = TWO_OVER_SQRT_PI * sx;
            v = TWO_OVER_SQRT_PI * sy;
        }
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
    }

    if yi < 0.0 {
        // w(z) = 2 exp(-z^2) - w(-z)
        if small {
            u2 *= 2.0;
            v2 *= 2.0;
        } else {
            xquad = -xquad;
            let w1 = 2.0 * xquad.exp();
            u2 = w1 * yquad.cos();
            v2 = -w1 * yquad.sin();
        }
        u = u2 - u;
        v = v2 - v;
        if xi > 0.0 {
            v = -v;
        }
    } else if xi < 0.0 {
        v = -v;
    }
    Complex64::new(u, v)
}

/// `exp(-z^2) * w(iz)`, i.e. `erfc(z)` for `Re z >= 0`, computed without
/// forming `exp(-z^2)` on its own (it may overflow while the product does not).
fn erfc_right(z: Complex64) -> Complex64 {
    let w = faddeeva(Complex64::new(-z.im, z.re));
    if w == Complex64::new(0.0, 0.0) {
        return w;
    }
    (-z * z + w.ln()).exp()
}

/// Complementary error function on the whole plane.
pub fn complex_erfc(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        return Complex64::new(1.0, 0.0) - erf_maclaurin(z);
    }
    if z.re >= 0.0 {
        erfc_right(z)
    } else {
        Complex64::new(2.0, 0.0) - erfc_right(-z)
    }
}

fn erf_maclaurin(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut power = z;
    let mut sum = z;
    let mut n = 0u32;
    loop {
        n += 1;
        power *= -z2 / n as f64;
        let term = power / (2 * n + 1) as f64;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() || n > 200 {
            break;
        }
    }
    sum * TWO_OVER_SQRT_PI
}

/// Error function for complex arguments with `|Im z| <= 30`.
///
/// Odd and conjugate-symmetric by construction. Values whose modulus exceeds
/// the double range (large `|Im z|` near the imaginary axis) come back as
/// infinities.
pub fn complex_erf(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.im.abs() > ERF_IM_ENVELOPE {
        return Err(Error::Accuracy(z));
    }
    Ok(erf_unchecked(z))
}

pub(crate) fn erf_unchecked(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        return erf_maclaurin(z);
    }
    if z.re == 0.0 {
        // erf(iy) = i erfi(y) exactly
        return Complex64::new(0.0, (Complex64::new(1.0, 0.0) - erfc_right(z)).im);
    }
    if z.re > 0.0 {
        Complex64::new(1.0, 0.0) - erfc_right(z)
    } else {
        erfc_right(-z) - Complex64::new(1.0, 0.0)
    }
}

const LANCZOS_G: f64 = 7.0;
// Published coefficients, kept verbatim.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Principal-branch `log Gamma(z)` by the Lanczos approximation (g = 7, nine
/// coefficients), with reflection for `Re z < 1/2`.
///
/// For `Re z >= 1/2` the imaginary part is the continuous continuation from
/// the positive real axis; through the reflection it is defined modulo 2*pi.
pub fn complex_log_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(z));
    }
    Ok(log_gamma_unchecked(z))
}

fn log_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
        let s = ln_sin_pi(z);
        return Complex64::new(PI.ln(), 0.0) - s - log_gamma_unchecked(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (z + 0.5) * t.ln() - t + acc.ln() + LN_SQRT_2PI
}

/// `log sin(pi z)` that stays finite for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let pz = z * PI;
    if pz.im.abs() < 30.0 {
        return pz.sin().ln();
    }
    // sin(w) = (e^{iw} - e^{-iw}) / 2i; keep the dominant exponential.
    if pz.im > 0.0 {
        // dominant: -e^{-iw}/(2i) = (i/2) e^{-iw}
        let tail = Complex64::new(1.0, 0.0) - (Complex64::i() * pz * 2.0).exp();
        Complex64::new(0.5f64.ln(), PI / 2.0) - Complex64::i() * pz + tail.ln()
    } else {
        // dominant: e^{iw}/(2i) = (-i/2) e^{iw}
        let tail = Complex64::new(1.0, 0.0) - (-Complex64::i() * pz * 2.0).exp();
        Complex64::new(0.5f64.ln(), -PI / 2.0) + Complex64::i() * pz + tail.ln()
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, `(1 + erf(x / sqrt 2)) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * complex_erfc(Complex64::new(-x / std::f64::consts::SQRT_2, 0.0)).re
}

/// Upper tail `1 - F(x)` without cancellation for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * complex_erfc(Complex64::new(x / std::f64::consts::SQRT_2, 0.0)).re
}

/// Exponentially scaled modified Bessel function `exp(-y) I_nu(y)` for real
/// order `nu >= 0` and `y > 0`.
pub fn bessel_i_scaled(nu: f64, y: f64) -> f64 {
    debug_assert!(nu >= 0.0 && y > 0.0);
    if y <= 25.0 {
        let half = 0.5 * y;
        let quarter_sq = half * half;
        let mut term = (nu * half.ln() - statrs::function::gamma::ln_gamma(nu + 1.0) - y).exp();
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= quarter_sq / (k * (k + nu));
            sum += term;
            if term <= 1e-17 * sum && k > half {
                break;
            }
        }
        sum
    } else {
        let mu4 = 4.0 * nu * nu;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut k = 0.0;
        loop {
            k += 1.0;
            let odd = 2.0 * k - 1.0;
            let next = -term * (mu4 - odd * odd) / (k * 8.0 * y);
            if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
                sum += next;
                break;
            }
            term = next;
            sum += term;
        }
        sum / (2.0 * PI * y).sqrt()
    }
}
