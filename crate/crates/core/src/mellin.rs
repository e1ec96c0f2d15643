//! Empirical Mellin transforms and the Laplace-exponent estimate
//! `Y_n(z) = z M_n(z) / M_n(z + 1)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::Sample;
use crate::special::complex_log_gamma;

/// Compensated (Neumaier) summation of complex terms.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.carry.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.carry.im);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn neumaier(sum: f64, x: f64, carry: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *carry += (sum - t) + x;
    } else {
        *carry += (x - t) + sum;
    }
    t
}

fn check_point(z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("evaluation point {z} is not finite")))
    }
}

/// `M_n(z) = (1/n) sum_k X_k^{z-1}`.
pub fn empirical_mellin(sample: &Sample, z: Complex64) -> Result<Complex64> {
    check_point(z)?;
    let w = z - 1.0;
    let mut acc = CompensatedSum::default();
    for &x in sample.values() {
        acc.add((w * x.ln()).exp());
    }
    Ok(acc.total() / sample.len() as f64)
}

/// `M_n(z)` and `M_n(z + 1)` with every observation divided by `scale`,
/// accumulated in a single pass.
fn scaled_pair(sample: &Sample, z: Complex64, scale: f64) -> (Complex64, Complex64) {
    let w = z - 1.0;
    let mut lower = CompensatedSum::default();
    let mut upper = CompensatedSum::default();
    for &x in sample.values() {
        let t = x / scale;
        let p = (w * t.ln()).exp();
        lower.add(p);
        upper.add(p * t);
    }
    let n = sample.len() as f64;
    (lower.total() / n, upper.total() / n)
}

/// `Y_n(z) = z M_n(z) / M_n(z + 1)`.
///
/// Observations are rescaled by their maximum before the powers are taken,
/// which leaves the ratio unchanged and keeps the sums in range for large
/// `Re z`.
pub fn laplace_estimate(sample: &Sample, z: Complex64) -> Result<Complex64> {
    check_point(z)?;
    let scale = sample.max();
    let (lower, upper) = scaled_pair(sample, z, scale);
    if upper == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole(z));
    }
    Ok(z * lower / (upper * scale))
}

/// `Y_n` along the vertical line `Re z = u0`, with a conditioning
/// diagnostic for each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCurve {
    pub u0: f64,
    pub v: Vec<f64>,
    pub values: Vec<Complex64>,
    /// `|M_n(u0 + 1 + iv)| / M_n(u0 + 1)`, in `[0, 1]`.
    pub denominator_ratio: Vec<f64>,
    pub ill_conditioned: Vec<bool>,
    pub floor: f64,
}

impl LaplaceCurve {
    /// A curve built from known values (an exact Laplace exponent, or a
    /// synthetic curve), with no conditioning information.
    pub fn from_values(u0: f64, v: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if v.len() != values.len() {
            return Err(Error::GridMismatch(format!("{} grid points but {} values", v.len(), values.len())));
        }
        let n = v.len();
        Ok(LaplaceCurve { u0, v, values, denominator_ratio: vec![1.0; n], ill_conditioned: vec![false; n], floor: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn ill_conditioned_count(&self) -> usize {
        self.ill_conditioned.iter().filter(|&&f| f).count()
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.v.iter().map(move |&v| Complex64::new(self.u0, v))
    }
}

/// Default conditioning floor `10 / sqrt(n)`: the normalized denominator
/// is an average of unit-modulus terms, so below this level it is
/// indistinguishable from sampling noise.
pub fn default_floor(n: usize) -> f64 {
    10.0 / (n as f64).sqrt()
}

/// Evaluates `Y_n(u0 + iv)` for every `v` in `v_grid`.
///
/// A point is flagged ill-conditioned when the normalized denominator
/// falls below `floor` (default [`default_floor`]) or when the sample has
/// no spread at all. Flagged points are still evaluated.
pub fn laplace_curve(sample: &Sample, u0: f64, v_grid: &[f64], floor: Option<f64>) -> Result<LaplaceCurve> {
    if !(u0.is_finite() && u0 > 0.0) {
        return Err(Error::InvalidParameter(format!("u0 must be > 0, got {u0}")));
    }
    if let Some(v) = v_grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid contains non-finite value {v}")));
    }
    let floor = floor.unwrap_or_else(|| default_floor(sample.len()));
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(Error::InvalidParameter(format!("floor must be >= 0, got {floor}")));
    }
    let degenerate = sample.is_degenerate();
    let scale = sample.max();
    let (_, reference) = scaled_pair(sample, Complex64::new(u0, 0.0), scale);
    let reference = reference.re;

    let points: Vec<(Complex64, f64)> = v_grid
        .par_iter()
        .map(|&v| {
            let z = Complex64::new(u0, v);
            let (lower, upper) = scaled_pair(sample, z, scale);
            if upper == Complex64::new(0.0, 0.0) {
                return Err(Error::Pole(z));
            }
            Ok((z * lower / (upper * scale), upper.norm() / reference))
        })
        .collect::<Result<_>>()?;
    let (values, ratio): (Vec<Complex64>, Vec<f64>) = points.into_iter().unzip();
    let flags = ratio.iter().map(|&r| degenerate || r < floor).collect();
    Ok(LaplaceCurve {
        u0,
        v: v_grid.to_vec(),
        values,
        denominator_ratio: ratio,
        ill_conditioned: flags,
        floor,
    })
}

/// Mellin transform of `Beta(b + 1, a/mu) / mu`, namely
/// `Gamma(p + q) / Gamma(p) * mu^{1-z} * Gamma(z + p - 1) / Gamma(z + p + q - 1)`
/// with `p = b + 1` and `q = a / mu`.
pub fn mellin_theoretical_beta(z: Complex64, a: f64, b: f64, mu: f64) -> Result<Complex64> {
    check_point(z)?;
    if !(a > 0.0 && b >= 0.0 && mu > 0.0 && a.is_finite() && b.is_finite() && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("need a > 0, b >= 0, mu > 0; got a = {a}, b = {b}, mu = {mu}")));
    }
    let alpha = b + 1.0;
    let beta = a / mu;
    let numerator = complex_log_gamma(z + alpha - 1.0)?;
    let denominator = match complex_log_gamma(z + alpha + beta - 1.0) {
        Ok(v) => v,
        // 1/Gamma vanishes at its poles
        Err(Error::Pole(_)) => return Ok(Complex64::new(0.0, 0.0)),
        Err(e) => return Err(e),
    };
    let constant = complex_log_gamma(Complex64::new(alpha + beta, 0.0))?
        - complex_log_gamma(Complex64::new(alpha, 0.0))?;
    Ok((constant + (1.0 - z) * mu.ln() + numerator - denominator).exp())
}

/// Mellin transform of `Gamma(shape b + 1, rate a)`:
/// `Gamma(b + z) / (Gamma(b + 1) a^{z-1})`.
pub fn mellin_theoretical_gamma(z: Complex64, a: f64, b: f64) -> Result<Complex64> {
    check_point(z)?;
    if !(a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("need a > 0 and b >= 0; got a = {a}, b = {b}")));
    }
    let log = complex_log_gamma(z + b)? - complex_log_gamma(Complex64::new(b + 1.0, 0.0))? - (z - 1.0) * a.ln();
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SubordinatorModel;
    use crate::sampling::{sample_beta_case, sample_gamma_case};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empirical_mellin_at_one_is_one() {
        let s = Sample::new(vec![0.3, 1.7, 2.2], 1.0, 0).unwrap();
        let m = empirical_mellin(&s, c(1.0, 0.0)).unwrap();
        assert!((m - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empirical_mellin_small_sample_by_hand() {
        let s = Sample::new(vec![2.0, 4.0], 1.0, 0).unwrap();
        // (2^{1+i} + 4^{1+i}) / 2
        let want = (c(2.0, 0.0).powc(c(1.0, 1.0)) + c(4.0, 0.0).powc(c(1.0, 1.0))) / 2.0;
        let got = empirical_mellin(&s, c(2.0, 1.0)).unwrap();
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn single_observation_laplace_estimate() {
        // Y_n(z) = z / x for a one-point sample
        let s = Sample::new(vec![0.8], 1.0, 0).unwrap();
        let z = c(3.0, -2.0);
        assert!((laplace_estimate(&s, z).unwrap() - z / 0.8).norm() < 1e-14);
    }

    #[test]
    fn rescaling_keeps_large_u0_finite() {
        let s = Sample::new(vec![1e-3, 2e-3, 0.5], 1.0, 0).unwrap();
        let y = laplace_estimate(&s, c(200.0, 5.0)).unwrap();
        assert!(y.re.is_finite() && y.im.is_finite());
    }

    #[test]
    fn curve_flags_degenerate_sample() {
        let s = Sample::new(vec![0.4; 10], 1.0, 0).unwrap();
        let curve = laplace_curve(&s, 1.0, &[-1.0, 0.0, 1.0], None).unwrap();
        assert_eq!(curve.ill_conditioned_count(), 3);
        for (z, y) in curve.points().zip(&curve.values) {
            assert!((y - z / 0.4).norm() < 1e-13);
        }
    }

    #[test]
    fn curve_rejects_bad_inputs() {
        let s = Sample::new(vec![0.4, 0.5], 1.0, 0).unwrap();
        assert!(laplace_curve(&s, 0.0, &[0.0], None).is_err());
        assert!(laplace_curve(&s, 1.0, &[f64::NAN], None).is_err());
        assert!(laplace_curve(&s, 1.0, &[0.0], Some(-1.0)).is_err());
    }

    #[test]
    fn denominator_ratio_is_one_on_the_real_axis() {
        let s = sample_gamma_case(500, 2.0, 1.0, 1).unwrap();
        let curve = laplace_curve(&s, 2.0, &[0.0], None).unwrap();
        assert!((curve.denominator_ratio[0] - 1.0).abs() < 1e-14);
        assert!(!curve.ill_conditioned[0]);
    }

    #[test]
    fn theoretical_transforms_equal_one_at_one() {
        let one = c(1.0, 0.0);
        assert!((mellin_theoretical_beta(one, 0.7, 0.2, 1.8).unwrap() - one).norm() < 1e-13);
        assert!((mellin_theoretical_gamma(one, 1.0, 1.0).unwrap() - one).norm() < 1e-13);
    }

    #[test]
    fn gamma_transform_moments() {
        // Gamma(shape 3, rate 2): E X = 1.5, E X^2 = 3
        assert!((mellin_theoretical_gamma(c(2.0, 0.0), 2.0, 2.0).unwrap().re - 1.5).abs() < 1e-13);
        assert!((mellin_theoretical_gamma(c(3.0, 0.0), 2.0, 2.0).unwrap().re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn beta_transform_mean() {
        // E[Beta(p, q)/mu] = p / ((p + q) mu)
        let (a, b, mu) = (0.7, 0.2, 1.8);
        let (p, q) = (b + 1.0, a / mu);
        let m = mellin_theoretical_beta(c(2.0, 0.0), a, b, mu).unwrap();
        assert!((m.re - p / ((p + q) * mu)).abs() < 1e-13);
    }

    #[test]
    fn theoretical_transforms_follow_recursion() {
        let beta = SubordinatorModel::cp_exp(1.8, 0.7, 0.2).unwrap();
        let gamma = SubordinatorModel::cp_exp(0.0, 1.0, 1.0).unwrap();
        for z in [c(0.7, 0.0), c(2.0, 3.0), c(29.0, -12.0)] {
            let lhs = mellin_theoretical_beta(z, 0.7, 0.2, 1.8).unwrap();
            let rhs = beta.laplace_exponent(z).unwrap() / z * mellin_theoretical_beta(z + 1.0, 0.7, 0.2, 1.8).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm(), "beta at {z}");
            let lhs = mellin_theoretical_gamma(z, 1.0, 1.0).unwrap();
            let rhs = gamma.laplace_exponent(z).unwrap() / z * mellin_theoretical_gamma(z + 1.0, 1.0, 1.0).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm(), "gamma at {z}");
        }
    }

    #[test]
    fn gamma_transform_pole() {
        assert!(matches!(mellin_theoretical_gamma(c(-1.0, 0.0), 1.0, 1.0), Err(Error::Pole(_))));
    }

    #[test]
    fn empirical_transform_tracks_theory() {
        let s = sample_beta_case(50_000, 0.7, 0.2, 1.8, 11).unwrap();
        for z in [c(1.5, 0.0), c(2.0, 4.0)] {
            let got = empirical_mellin(&s, z).unwrap();
            let want = mellin_theoretical_beta(z, 0.7, 0.2, 1.8).unwrap();
            assert!((got - want).norm() < 0.02 * want.norm().max(0.05), "{z}: {got} vs {want}");
        }
    }
}
