//! Stationary samples of the exponential functional `A = int_0^inf exp(-xi_t) dt`.
//!
//! Observations of the generalized Ornstein-Uhlenbeck process are taken to
//! be exact draws from its stationary law, so every sampler here produces
//! i.i.d. copies of `A`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SubordinatorModel;
use crate::quad::integrate;
use crate::special::{bessel_i_scaled, normal_sf};

/// ChaCha20 generator on the given 64-bit stream of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of replicate `index` derived from a study seed (SplitMix64 finalizer).
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Observations `X_1, ..., X_n` of the stationary process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    /// Observation spacing; bookkeeping only.
    pub spacing: f64,
    pub seed: u64,
}

impl Sample {
    pub fn new(values: Vec<f64>, spacing: f64, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        if let Some((i, x)) = values.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidSample(format!(
                "observation {} is {x}; every observation must be finite and > 0",
                i + 1
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("spacing must be > 0, got {spacing}")));
        }
        Ok(Sample { values, spacing, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    /// All observations identical: the sample carries no information about
    /// the Laplace exponent.
    pub fn is_degenerate(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&x| x == first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncationPolicy {
    /// Stop once the tail bound drops below `tolerance` times the partial sum.
    pub tolerance: f64,
    pub max_terms: usize,
}

impl Default for SeriesTruncationPolicy {
    fn default() -> Self {
        SeriesTruncationPolicy { tolerance: 1e-12, max_terms: 1_000_000 }
    }
}

impl SeriesTruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "series tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

fn require_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("sample size n must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Pure-jump case (`mu = 0`): `A ~ Gamma(shape b + 1, rate a)`.
pub fn sample_gamma_case(n: usize, a: f64, b: f64, seed: u64) -> Result<Sample> {
    require_count(n)?;
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b >= 0.0) {
        return Err(Error::InvalidParameter(format!("need a > 0 and b >= 0, got a = {a}, b = {b}")));
    }
    let dist = Gamma::new(b + 1.0, 1.0 / a).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    let values = (0..n).map(|_| positive_draw(&mut rng, |r| dist.sample(r))).collect();
    Sample::new(values, 1.0, seed)
}

/// Drift plus exponential jumps: `A ~ Beta(b + 1, a / mu) / mu`, supported on
/// `(0, 1/mu]`.
pub fn sample_beta_case(n: usize, a: f64, b: f64, mu: f64, seed: u64) -> Result<Sample> {
    require_count(n)?;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("drift mu must be > 0, got {mu}")));
    }
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b >= 0.0) {
        return Err(Error::InvalidParameter(format!("need a > 0 and b >= 0, got a = {a}, b = {b}")));
    }
    let dist = Beta::new(b + 1.0, a / mu).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    let values = (0..n).map(|_| positive_draw(&mut rng, |r| dist.sample(r)) / mu).collect();
    Sample::new(values, 1.0, seed)
}

fn positive_draw<R: Rng>(rng: &mut R, mut draw: impl FnMut(&mut R) -> f64) -> f64 {
    loop {
        let x = draw(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// Compound-Poisson case via `A = sum_k q^{S_k} (T_{k+1} - T_k)`.
///
/// Each draw runs on its own RNG stream, so a draw depends only on
/// `(seed, index)` and not on how many terms earlier draws consumed.
pub fn sample_series_cp(
    n: usize,
    model: &SubordinatorModel,
    policy: &SeriesTruncationPolicy,
    seed: u64,
) -> Result<Sample> {
    require_count(n)?;
    model.validate()?;
    policy.validate()?;
    let SubordinatorModel::TruncNormCp { lambda, q, alpha } = *model else {
        return Err(Error::InvalidParameter("series sampler needs a trunc_norm_cp model".into()));
    };
    let gaps = Exp::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let ln_q = q.ln();
    let tail_scale = 1.0 / (lambda * (1.0 - q.powf(alpha)));
    let upper_tail = normal_sf(alpha);

    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let mut exponent = 0.0; // S_k
        let mut partial = 0.0;
        let mut terms = 0;
        loop {
            partial += (exponent * ln_q).exp() * gaps.sample(&mut rng);
            terms += 1;
            exponent += truncated_normal(&mut rng, upper_tail);
            let bound = (exponent * ln_q).exp() * tail_scale;
            if bound < policy.tolerance * partial {
                break;
            }
            if terms >= policy.max_terms {
                return Err(Error::Truncation { terms, ratio: bound / partial });
            }
        }
        values.push(partial);
    }
    Sample::new(values, 1.0, seed)
}

/// Standard normal conditioned on `(alpha, inf)` by inverting the upper
/// tail: `eta = sqrt(2) erfc^{-1}(2 U (1 - F(alpha)))`.
fn truncated_normal<R: Rng>(rng: &mut R, upper_tail: f64) -> f64 {
    // U in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u * upper_tail)
}

/// Draws from the stationary law of the given model: Beta case for
/// `CpExp` with positive drift, Gamma case for zero drift, series otherwise.
pub fn sample_stationary(model: &SubordinatorModel, n: usize, seed: u64) -> Result<Sample> {
    model.validate()?;
    match *model {
        SubordinatorModel::CpExp { mu, a, b } if mu > 0.0 => sample_beta_case(n, a, b, mu, seed),
        SubordinatorModel::CpExp { a, b, .. } => sample_gamma_case(n, a, b, seed),
        SubordinatorModel::TruncNormCp { .. } => {
            sample_series_cp(n, model, &SeriesTruncationPolicy::default(), seed)
        }
    }
}

/// Closed-form density of the Brownian-with-jumps case,
/// `C x^{b - 1/2} exp(-1/(2x)) I_nu(1/(2x))` with `nu = sqrt(a + 1/4)`.
///
/// Integrable iff `nu > b + 1/2`, equivalently `a > b (b + 1)`. The
/// normalizing constant is computed once and cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pi3Density {
    a: f64,
    b: f64,
    order: f64,
    norm: f64,
}

impl Pi3Density {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("need a > 0 and b > 0, got a = {a}, b = {b}")));
        }
        let order = (a + 0.25).sqrt();
        if order <= b + 0.5 {
            return Err(Error::Domain(format!(
                "density is not normalizable for a = {a}, b = {b} (needs a > b(b+1))"
            )));
        }
        let mass = unnormalized_mass(order, b);
        Ok(Pi3Density { a, b, order, norm: 1.0 / mass })
    }

    pub fn normalizing_constant(&self) -> f64 {
        self.norm
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::Domain(format!("density defined for x > 0, got {x}")));
        }
        if !x.is_finite() {
            return Ok(0.0);
        }
        Ok(self.norm * pi3_kernel(x, self.order, self.b))
    }

    pub fn params(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

fn pi3_kernel(x: f64, order: f64, b: f64) -> f64 {
    x.powf(b - 0.5) * bessel_i_scaled(order, 0.5 / x)
}

fn unnormalized_mass(order: f64, b: f64) -> f64 {
    use std::f64::consts::PI;
    // integrate over t = ln x; analytic tails at both ends
    let x_lo: f64 = 1e-12;
    let x_hi: f64 = 1e6;
    let integrand = |t: f64| {
        let x = t.exp();
        pi3_kernel(x, order, b) * x
    };
    let (t_lo, t_hi) = (x_lo.ln(), x_hi.ln());
    let rough = integrate(integrand, t_lo, t_hi, 1e-6);
    let body = integrate(integrand, t_lo, t_hi, 1e-14 * rough.abs().max(1e-300));

    // x -> 0: exp(-y) I_nu(y) ~ 1/sqrt(2 pi y), so the kernel ~ x^b / sqrt(pi)
    let lower = x_lo.powf(b + 1.0) / ((b + 1.0) * PI.sqrt());

    // x -> inf: kernel ~ x^p 4^{-nu} / Gamma(nu + 1) (1 - 1/(2x) + c2/(4x^2))
    let p = b - 0.5 - order;
    let c2 = 0.5 + 0.25 / (order + 1.0);
    let k = 4f64.powf(-order) / statrs::function::gamma::gamma(order + 1.0);
    let upper = k
        * (x_hi.powf(p + 1.0) / (-p - 1.0) - x_hi.powf(p) / (2.0 * -p) + c2 * x_hi.powf(p - 1.0) / (4.0 * (1.0 - p)));
    body + lower + upper
}

/// `pi_3(x; a, b)` with its normalizing constant cached per `(a, b)`.
pub fn density_pi3(x: f64, a: f64, b: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Pi3Density>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (a.to_bits(), b.to_bits());
    let cached = cache.lock().expect("pi3 cache poisoned").get(&key).copied();
    let density = match cached {
        Some(d) => d,
        None => {
            let d = Pi3Density::new(a, b)?;
            cache.lock().expect("pi3 cache poisoned").insert(key, d);
            d
        }
    };
    density.density(x)
}
