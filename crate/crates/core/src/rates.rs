//! Bandwidth rules and Monte-Carlo convergence studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{linspace, run_algorithm1, run_algorithm2, EstimationConfig, LevyDensityEstimate};
use crate::models::SubordinatorModel;
use crate::sampling::{replicate_seed, sample_stationary};

/// `V_n = n^{1/(2 beta + 2s + 3)}`, for Lévy densities with polynomially
/// decaying Fourier transforms.
pub fn choose_vn_polynomial(n: usize, beta: f64, s: u32) -> Result<f64> {
    let denom = 2.0 * beta + 2.0 * s as f64 + 3.0;
    if denom.is_nan() || denom <= 0.0 || denom.is_infinite() {
        return Err(Error::Domain(format!("2 beta + 2s + 3 = {denom} must be positive")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    Ok((n as f64).powf(1.0 / denom))
}

/// `V_n = ln(n) / (2 alpha) - (s + 2) ln(ln n) / alpha`, for exponentially
/// decaying Fourier transforms.
pub fn choose_vn_exponential(n: usize, alpha: f64, s: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("n must be >= 3 for ln ln n > 0, got {n}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    let ln_n = (n as f64).ln();
    let vn = ln_n / (2.0 * alpha) - (s as f64 + 2.0) / alpha * ln_n.ln();
    if vn > 0.0 {
        Ok(vn)
    } else {
        Err(Error::Domain(format!("bandwidth {vn} is not positive for n = {n}, alpha = {alpha}, s = {s}")))
    }
}

/// Trapezoid integral of `(nu_bar_hat - truth)^2` over the estimate's grid
/// points inside `[lo, hi]`.
pub fn mise(estimate: &LevyDensityEstimate, truth: impl Fn(f64) -> f64, range: (f64, f64)) -> Result<f64> {
    integrated_squared_error(&estimate.x, &estimate.nu_bar_hat, truth, range)
}

pub fn integrated_squared_error(
    x: &[f64],
    values: &[f64],
    truth: impl Fn(f64) -> f64,
    (lo, hi): (f64, f64),
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!("invalid range [{lo}, {hi}]")));
    }
    if x.len() != values.len() {
        return Err(Error::GridMismatch(format!("{} abscissae, {} values", x.len(), values.len())));
    }
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(values)
        .filter(|(&x, _)| x >= lo && x <= hi)
        .map(|(&x, &v)| (x, (v - truth(x)).powi(2)))
        .collect();
    Ok(pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}

/// Median of the finite entries; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linearly interpolated sample quantile of the finite entries.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Least-squares slope of `ln y` against `ln n`. `None` when fewer than two
/// points have positive finite `y`.
pub fn fit_loglog_slope(n: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n
        .iter()
        .zip(y)
        .filter(|(&n, &y)| n > 0.0 && y > 0.0 && y.is_finite())
        .map(|(n, y)| (n.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    Polynomial,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateStudyConfig {
    pub smoothness: u32,
    /// Polynomial decay exponent `beta`.
    #[serde(default)]
    pub beta: f64,
    /// Exponential decay rate `alpha`.
    #[serde(default = "one")]
    pub alpha: f64,
    pub class: DecayClass,
    pub replicates: usize,
    pub n_ladder: Vec<usize>,
    /// Radius of the smoothness class; recorded only.
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_x_range")]
    pub x_range: (f64, f64),
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_x_range() -> (f64, f64) {
    (0.0, 3.0)
}

fn default_x_points() -> usize {
    301
}

impl RateStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "n ladder needs at least two sizes, got {}",
                self.n_ladder.len()
            )));
        }
        if self.n_ladder.windows(2).any(|w| w[1] <= w[0]) || self.n_ladder[0] == 0 {
            return Err(Error::InvalidParameter("n ladder must be positive and strictly increasing".into()));
        }
        if self.replicates < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 replicates, got {}", self.replicates)));
        }
        let (lo, hi) = self.x_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || self.x_points < 2 {
            return Err(Error::InvalidParameter("x range must be finite with lo < hi and >= 2 points".into()));
        }
        for &n in &self.n_ladder {
            self.bandwidth(n)?;
        }
        Ok(())
    }

    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        match self.class {
            DecayClass::Polynomial => choose_vn_polynomial(n, self.beta, self.smoothness),
            DecayClass::Exponential => choose_vn_exponential(n, self.alpha, self.smoothness),
        }
    }

    /// Theoretical exponent of the squared drift/intensity error (without
    /// the logarithmic factor), polynomial class only.
    pub fn theoretical_parameter_slope(&self) -> Option<f64> {
        match self.class {
            DecayClass::Polynomial => {
                let s = self.smoothness as f64;
                Some(-2.0 * (s + 2.0) / (2.0 * self.beta + 2.0 * s + 3.0))
            }
            DecayClass::Exponential => None,
        }
    }
}

/// Outcome of one replicate of a Monte-Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub vn: f64,
    pub mu_hat: Option<f64>,
    pub lambda_hat: Option<f64>,
    pub mise: Option<f64>,
    pub error: Option<String>,
}

/// Draws `replicates` samples at each ladder size and runs Algorithm 1
/// (and Algorithm 2 when `density` is given) on each, in parallel. Failures
/// are recorded in the returned records.
pub fn run_replicates(
    model: &SubordinatorModel,
    ladder: &[usize],
    replicates: usize,
    seed: u64,
    vn_for: impl Fn(usize) -> Result<f64> + Sync,
    template: &EstimationConfig,
    density: Option<(&[f64], (f64, f64))>,
) -> Vec<ReplicateRecord> {
    let jobs: Vec<(usize, usize)> = (0..ladder.len()).flat_map(|i| (0..replicates).map(move |r| (i, r))).collect();
    jobs.par_iter()
        .map(|&(i, r)| {
            let n = ladder[i];
            let seed = replicate_seed(seed, (i * replicates + r) as u64);
            let mut record =
                ReplicateRecord { n, replicate: r, seed, vn: f64::NAN, mu_hat: None, lambda_hat: None, mise: None, error: None };
            let outcome = (|| -> Result<()> {
                let vn = vn_for(n)?;
                record.vn = vn;
                let config = EstimationConfig { vn, ..*template };
                let sample = sample_stationary(model, n, seed)?;
                match density {
                    Some((x, range)) => {
                        let (triplet, est) = run_algorithm2(&sample, &config, x)?;
                        record.mu_hat = Some(triplet.mu_hat);
                        record.lambda_hat = Some(triplet.lambda_hat);
                        record.mise = Some(mise(&est, |x| model.levy_density_bar(x, config.u0), range)?);
                    }
                    None => {
                        let triplet = run_algorithm1(&sample, &config)?;
                        record.mu_hat = Some(triplet.mu_hat);
                        record.lambda_hat = Some(triplet.lambda_hat);
                    }
                }
                Ok(())
            })();
            if let Err(e) = outcome {
                record.error = Some(e.to_string());
            }
            record
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub n: usize,
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiseReport {
    pub n: Vec<usize>,
    pub vn: Vec<f64>,
    pub median_sq_err_mu: Vec<f64>,
    pub median_sq_err_lambda: Vec<f64>,
    pub median_mise: Vec<f64>,
    /// First and third quartiles per ladder size.
    pub quartiles_sq_err_mu: Vec<[f64; 2]>,
    pub quartiles_sq_err_lambda: Vec<[f64; 2]>,
    pub quartiles_mise: Vec<[f64; 2]>,
    pub slope_mu: Option<f64>,
    pub slope_lambda: Option<f64>,
    pub slope_mise: Option<f64>,
    pub theoretical_slope_mu: Option<f64>,
    pub replicates: usize,
    pub radius: f64,
    pub failures: Vec<ReplicateFailure>,
}

/// Runs the full study: Algorithms 1 and 2 for every replicate, with `V_n`
/// from the bandwidth rule of `study.class`.
pub fn rate_study(study: &RateStudyConfig, model: &SubordinatorModel, template: &EstimationConfig) -> Result<MiseReport> {
    study.validate()?;
    model.validate()?;
    template.validate()?;
    let x = linspace(study.x_range.0, study.x_range.1, study.x_points);
    let records = run_replicates(
        model,
        &study.n_ladder,
        study.replicates,
        study.seed,
        |n| study.bandwidth(n),
        template,
        Some((&x, study.x_range)),
    );
    let (mu, lambda) = (model.drift(), model.total_mass());
    let mut report = MiseReport {
        n: study.n_ladder.clone(),
        vn: Vec::new(),
        median_sq_err_mu: Vec::new(),
        median_sq_err_lambda: Vec::new(),
        median_mise: Vec::new(),
        quartiles_sq_err_mu: Vec::new(),
        quartiles_sq_err_lambda: Vec::new(),
        quartiles_mise: Vec::new(),
        slope_mu: None,
        slope_lambda: None,
        slope_mise: None,
        theoretical_slope_mu: study.theoretical_parameter_slope(),
        replicates: study.replicates,
        radius: study.radius,
        failures: Vec::new(),
    };
    for &n in &study.n_ladder {
        let cell: Vec<&ReplicateRecord> = records.iter().filter(|r| r.n == n).collect();
        let collect = |f: &dyn Fn(&ReplicateRecord) -> Option<f64>| -> Vec<f64> { cell.iter().filter_map(|r| f(r)).collect() };
        let e_mu = collect(&|r| r.mu_hat.map(|m| (m - mu).powi(2)));
        let e_lambda = collect(&|r| r.lambda_hat.map(|l| (l - lambda).powi(2)));
        let e_mise = collect(&|r| r.mise);
        report.vn.push(study.bandwidth(n)?);
        report.median_sq_err_mu.push(median(&e_mu));
        report.median_sq_err_lambda.push(median(&e_lambda));
        report.median_mise.push(median(&e_mise));
        report.quartiles_sq_err_mu.push([quantile(&e_mu, 0.25), quantile(&e_mu, 0.75)]);
        report.quartiles_sq_err_lambda.push([quantile(&e_lambda, 0.25), quantile(&e_lambda, 0.75)]);
        report.quartiles_mise.push([quantile(&e_mise, 0.25), quantile(&e_mise, 0.75)]);
        report.failures.extend(cell.iter().filter_map(|r| {
            r.error.as_ref().map(|e| ReplicateFailure { n, replicate: r.replicate, error: e.clone() })
        }));
    }
    let ns: Vec<f64> = report.n.iter().map(|&n| n as f64).collect();
    report.slope_mu = fit_loglog_slope(&ns, &report.median_sq_err_mu);
    report.slope_lambda = fit_loglog_slope(&ns, &report.median_sq_err_lambda);
    report.slope_mise = fit_loglog_slope(&ns, &report.median_mise);
    Ok(report)
}
