//! Estimators of the drift `mu`, the jump intensity `lambda` and the Lévy
//! density `nu` from the estimated Laplace exponent.
//!
//! Algorithm 1 evaluates `Y_n` on the one-sided grid `alpha_j V_n`,
//! `alpha_j = eps + j (1 - eps)/M`, `j = 1..M`, and fits the affine model
//! `Y(u0 + iv) ~ lambda + mu (u0 + iv)` by weighted least squares. Algorithm 2
//! evaluates `Y_n` on the symmetric grid `alpha_m = -1 + 2m/M`, `m = 0..M`,
//! subtracts the fitted affine part and inverts the remainder with a
//! flat-top kernel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, WeightKind, WeightSpec};
use crate::mellin::{laplace_curve, LaplaceCurve};
use crate::sampling::Sample;

/// Tuning inputs of both algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub u0: f64,
    pub vn: f64,
    pub eps: f64,
    /// Grid count `M` of Algorithm 1.
    pub grid_m: usize,
    /// Grid count `M` of Algorithm 2.
    pub density_grid_m: usize,
    pub weight: WeightKind,
    pub kernel: KernelSpec,
    /// Conditioning floor for the Mellin denominator; `None` means `10/sqrt(n)`.
    pub floor: Option<f64>,
    /// Clip negative density values to zero.
    pub positive_part: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            u0: 1.0,
            vn: 5.0,
            eps: 0.1,
            grid_m: 50,
            density_grid_m: 200,
            weight: WeightKind::Flat,
            kernel: KernelSpec::FlatTop,
            floor: None,
            positive_part: false,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.u0.is_finite() && self.u0 > 0.0) {
            return bad(format!("u0 must be > 0, got {}", self.u0));
        }
        if !(self.vn.is_finite() && self.vn > 0.0) {
            return bad(format!("vn must be > 0, got {}", self.vn));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.grid_m < 2 || self.density_grid_m < 2 {
            return bad(format!(
                "grid counts must be >= 2, got grid_m = {}, density_grid_m = {}",
                self.grid_m, self.density_grid_m
            ));
        }
        if let Some(f) = self.floor {
            if !(f.is_finite() && f >= 0.0) {
                return bad(format!("floor must be >= 0, got {f}"));
            }
        }
        Ok(())
    }

    pub fn weight_spec(&self) -> WeightSpec {
        WeightSpec { kind: self.weight, eps: self.eps }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let config: EstimationConfig = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Frequencies `alpha_j V_n` of Algorithm 1.
    pub fn one_sided_grid(&self) -> Vec<f64> {
        one_sided_alphas(self.eps, self.grid_m).into_iter().map(|a| a * self.vn).collect()
    }

    /// Frequencies `alpha_m V_n` of Algorithm 2.
    pub fn symmetric_grid(&self) -> Vec<f64> {
        symmetric_alphas(self.density_grid_m).into_iter().map(|a| a * self.vn).collect()
    }
}

/// `alpha_j = eps + j (1 - eps) / M` for `j = 1..=M`.
pub fn one_sided_alphas(eps: f64, m: usize) -> Vec<f64> {
    (1..=m).map(|j| eps + j as f64 * (1.0 - eps) / m as f64).collect()
}

/// `alpha_m = -1 + 2m / M` for `m = 0..=M`.
pub fn symmetric_alphas(m: usize) -> Vec<f64> {
    (0..=m).map(|k| -1.0 + 2.0 * k as f64 / m as f64).collect()
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn check_grid(curve: &LaplaceCurve, expected: &[f64], u0: f64) -> Result<()> {
    if curve.u0 != u0 {
        return Err(Error::GridMismatch(format!("curve lies on Re z = {}, config has u0 = {u0}", curve.u0)));
    }
    if curve.v.len() != expected.len() {
        return Err(Error::GridMismatch(format!(
            "curve has {} points, config implies {}",
            curve.v.len(),
            expected.len()
        )));
    }
    for (k, (&got, &want)) in curve.v.iter().zip(expected).enumerate() {
        if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("grid point {k} is {got}, expected {want}")));
        }
    }
    Ok(())
}

/// `sum w_j alpha_j Im Y_j / (V_n sum w_j alpha_j^2)` for explicit weights.
pub fn weighted_mu(alphas: &[f64], weights: &[f64], im_y: &[f64], vn: f64) -> Result<f64> {
    let den: f64 = alphas.iter().zip(weights).map(|(a, w)| w * a * a).sum();
    if den == 0.0 {
        return Err(Error::DegenerateWeights("sum of w(alpha) alpha^2 vanishes"));
    }
    let num: f64 = alphas.iter().zip(weights).zip(im_y).map(|((a, w), y)| w * a * y).sum();
    Ok(num / (vn * den))
}

/// `sum w_j Re Y_j / sum w_j - mu_hat u0` for explicit weights.
pub fn weighted_lambda(weights: &[f64], re_y: &[f64], mu_hat: f64, u0: f64) -> Result<f64> {
    let den: f64 = weights.iter().sum();
    if den == 0.0 {
        return Err(Error::DegenerateWeights("sum of w(alpha) vanishes"));
    }
    let num: f64 = weights.iter().zip(re_y).map(|(w, y)| w * y).sum();
    Ok(num / den - mu_hat * u0)
}

fn algorithm1_weights(config: &EstimationConfig) -> (Vec<f64>, Vec<f64>) {
    let alphas = one_sided_alphas(config.eps, config.grid_m);
    let spec = config.weight_spec();
    let weights = alphas.iter().map(|&a| spec.eval(a)).collect();
    (alphas, weights)
}

/// Drift estimate from a curve on the Algorithm 1 grid.
pub fn estimate_mu(curve: &LaplaceCurve, config: &EstimationConfig) -> Result<f64> {
    config.validate()?;
    check_grid(curve, &config.one_sided_grid(), config.u0)?;
    let (alphas, weights) = algorithm1_weights(config);
    let im: Vec<f64> = curve.values.iter().map(|y| y.im).collect();
    weighted_mu(&alphas, &weights, &im, config.vn)
}

/// Intensity estimate from a curve on the Algorithm 1 grid.
pub fn estimate_lambda(curve: &LaplaceCurve, mu_hat: f64, config: &EstimationConfig) -> Result<f64> {
    config.validate()?;
    check_grid(curve, &config.one_sided_grid(), config.u0)?;
    let (_, weights) = algorithm1_weights(config);
    let re: Vec<f64> = curve.values.iter().map(|y| y.re).collect();
    weighted_lambda(&weights, &re, mu_hat, config.u0)
}

/// `F^[nu_bar](-v) = -Y + mu_hat (u0 + iv) + lambda_hat` at one point.
pub fn fourier_nu_bar_hat(y: Complex64, z: Complex64, mu_hat: f64, lambda_hat: f64) -> Complex64 {
    -y + mu_hat * z + lambda_hat
}

/// [`fourier_nu_bar_hat`] at the curve point with frequency `v`.
pub fn estimate_fourier_nu_bar(curve: &LaplaceCurve, mu_hat: f64, lambda_hat: f64, v: f64) -> Result<Complex64> {
    let k = curve
        .v
        .iter()
        .position(|&w| w == v)
        .ok_or_else(|| Error::GridMismatch(format!("v = {v} is not a curve grid point")))?;
    Ok(fourier_nu_bar_hat(curve.values[k], Complex64::new(curve.u0, v), mu_hat, lambda_hat))
}

/// Samples of `F[nu_bar](-v)` on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSamples {
    pub v: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FourierSamples {
    /// Applies [`fourier_nu_bar_hat`] along a whole curve.
    pub fn from_curve(curve: &LaplaceCurve, mu_hat: f64, lambda_hat: f64) -> Self {
        let values = curve
            .points()
            .zip(&curve.values)
            .map(|(z, &y)| fourier_nu_bar_hat(y, z, mu_hat, lambda_hat))
            .collect();
        FourierSamples { v: curve.v.clone(), values }
    }

    /// Tabulates a known transform on the Algorithm 2 grid of `config`.
    pub fn from_fn(config: &EstimationConfig, f: impl Fn(f64) -> Complex64) -> Self {
        let v = config.symmetric_grid();
        let values = v.iter().map(|&v| f(v)).collect();
        FourierSamples { v, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletEstimate {
    pub mu_hat: f64,
    pub lambda_hat: f64,
    pub ill_conditioned_count: usize,
    pub degenerate_sample: bool,
    pub curve: LaplaceCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyDensityEstimate {
    pub x: Vec<f64>,
    /// `nu_n(x) = exp(u0 x) Re nu_bar_n(x)`.
    pub nu_hat: Vec<f64>,
    /// Real part of the inversion, an estimate of `exp(-u0 x) nu(x)`.
    pub nu_bar_hat: Vec<f64>,
    /// Imaginary part of the inversion on the `nu_bar` scale.
    pub imag_residual: Vec<f64>,
    pub config: EstimationConfig,
    pub mu_hat: Option<f64>,
    pub lambda_hat: Option<f64>,
    pub ill_conditioned_count: usize,
}

fn check_x_grid(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("x grid is empty".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("x grid contains non-finite values".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("x grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Regularized Fourier inversion
/// `nu_bar_n(x) = (1/2pi) (2 V_n/(M + 1)) sum_m exp(i v_m x) F^(-v_m) K(alpha_m)`.
///
/// The real part is the estimate; the imaginary part is kept as a
/// diagnostic.
pub fn invert_levy_density(fhat: &FourierSamples, config: &EstimationConfig, x: &[f64]) -> Result<LevyDensityEstimate> {
    config.validate()?;
    check_x_grid(x)?;
    let expected = config.symmetric_grid();
    if fhat.v.len() != fhat.values.len() {
        return Err(Error::GridMismatch(format!("{} frequencies but {} values", fhat.v.len(), fhat.values.len())));
    }
    if fhat.v.len() != expected.len() {
        return Err(Error::GridMismatch(format!(
            "{} frequencies, config implies {}",
            fhat.v.len(),
            expected.len()
        )));
    }
    for (k, (&got, &want)) in fhat.v.iter().zip(&expected).enumerate() {
        if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("frequency {k} is {got}, expected {want}")));
        }
    }

    let m = config.density_grid_m;
    let weighted: Vec<(f64, Complex64)> = symmetric_alphas(m)
        .iter()
        .zip(&expected)
        .zip(&fhat.values)
        .map(|((&a, &v), &f)| (v, f * config.kernel.eval(a)))
        .collect();
    let prefactor = 2.0 * config.vn / ((m + 1) as f64) / (2.0 * PI);

    let nu_bar: Vec<Complex64> = x
        .par_iter()
        .map(|&x| {
            let sum: Complex64 = weighted.iter().map(|&(v, f)| Complex64::from_polar(1.0, v * x) * f).sum();
            sum * prefactor
        })
        .collect();

    let clip = |v: f64| if config.positive_part { v.max(0.0) } else { v };
    let nu_bar_hat: Vec<f64> = nu_bar.iter().map(|c| clip(c.re)).collect();
    let nu_hat = x.iter().zip(&nu_bar_hat).map(|(&x, &nb)| (config.u0 * x).exp() * nb).collect();
    Ok(LevyDensityEstimate {
        x: x.to_vec(),
        nu_hat,
        nu_bar_hat,
        imag_residual: nu_bar.iter().map(|c| c.im).collect(),
        config: *config,
        mu_hat: None,
        lambda_hat: None,
        ill_conditioned_count: 0,
    })
}

/// Algorithm 1: drift and intensity from a sample.
pub fn run_algorithm1(sample: &Sample, config: &EstimationConfig) -> Result<TripletEstimate> {
    config.validate()?;
    let curve = laplace_curve(sample, config.u0, &config.one_sided_grid(), config.floor)?;
    let mu_hat = estimate_mu(&curve, config)?;
    let lambda_hat = estimate_lambda(&curve, mu_hat, config)?;
    Ok(TripletEstimate {
        mu_hat,
        lambda_hat,
        ill_conditioned_count: curve.ill_conditioned_count(),
        degenerate_sample: sample.is_degenerate(),
        curve,
    })
}

/// Algorithm 2: the Lévy density on `x`, reusing Algorithm 1's drift and
/// intensity. `Y_n` is recomputed on the symmetric grid.
pub fn run_algorithm2(sample: &Sample, config: &EstimationConfig, x: &[f64]) -> Result<(TripletEstimate, LevyDensityEstimate)> {
    let triplet = run_algorithm1(sample, config)?;
    check_x_grid(x)?;
    let curve = laplace_curve(sample, config.u0, &config.symmetric_grid(), config.floor)?;
    let fhat = FourierSamples::from_curve(&curve, triplet.mu_hat, triplet.lambda_hat);
    let mut estimate = invert_levy_density(&fhat, config, x)?;
    estimate.mu_hat = Some(triplet.mu_hat);
    estimate.lambda_hat = Some(triplet.lambda_hat);
    estimate.ill_conditioned_count = curve.ill_conditioned_count();
    Ok((triplet, estimate))
}
