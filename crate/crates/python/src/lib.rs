//! Python bindings: samplers, the empirical Laplace curve and both
//! estimation algorithms, operating on plain lists of floats.

use levy_mellin::estimators::{run_algorithm1, run_algorithm2};
use levy_mellin::kernels::{flat_top as flat_top_kernel, WeightKind};
use levy_mellin::mellin::laplace_curve as empirical_laplace_curve;
use levy_mellin::sampling::{sample_beta_case, sample_gamma_case, sample_series_cp, SeriesTruncationPolicy};
use levy_mellin::special;
use levy_mellin::{EstimationConfig, Error, Sample, SubordinatorModel};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyOSError::new_err(msg),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn sample(values: Vec<f64>) -> PyResult<Sample> {
    Sample::new(values, 1.0, 0).map_err(to_py)
}

#[allow(clippy::too_many_arguments)]
fn config(u0: f64, vn: f64, eps: f64, grid_m: usize, density_grid_m: usize, weight: &str, positive_part: bool) -> PyResult<EstimationConfig> {
    let weight: WeightKind = weight.parse().map_err(to_py)?;
    let c = EstimationConfig { u0, vn, eps, grid_m, density_grid_m, weight, positive_part, ..Default::default() };
    c.validate().map_err(to_py)?;
    Ok(c)
}

/// Beta-case stationary sample (compound Poisson with exponential jumps and drift `mu`).
#[pyfunction]
#[pyo3(signature = (n, a, b, mu, seed=0))]
fn simulate_beta(n: usize, a: f64, b: f64, mu: f64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(sample_beta_case(n, a, b, mu, seed).map_err(to_py)?.values().to_vec())
}

/// Gamma-case stationary sample (no drift).
#[pyfunction]
#[pyo3(signature = (n, a, b, seed=0))]
fn simulate_gamma(n: usize, a: f64, b: f64, seed: u64) -> PyResult<Vec<f64>> {
    Ok(sample_gamma_case(n, a, b, seed).map_err(to_py)?.values().to_vec())
}

/// Truncated-normal compound Poisson case by series summation.
#[pyfunction]
#[pyo3(signature = (n, lam, q, alpha, seed=0, tolerance=1e-12, max_terms=1_000_000))]
fn simulate_series(n: usize, lam: f64, q: f64, alpha: f64, seed: u64, tolerance: f64, max_terms: usize) -> PyResult<Vec<f64>> {
    let model = SubordinatorModel::trunc_norm_cp(lam, q, alpha).map_err(to_py)?;
    let policy = SeriesTruncationPolicy { tolerance, max_terms };
    Ok(sample_series_cp(n, &model, &policy, seed).map_err(to_py)?.values().to_vec())
}

/// Laplace exponent of a model given as JSON, e.g.
/// `{"model": "cp_exp", "mu": 1.8, "a": 0.7, "b": 0.2}`.
#[pyfunction]
fn laplace_exponent(model_json: &str, z: Complex64) -> PyResult<Complex64> {
    let model = SubordinatorModel::from_json_str(model_json).map_err(to_py)?;
    model.laplace_exponent(z).map_err(to_py)
}

/// Empirical Laplace exponent on `u0 + i v`; returns `(values, ill_conditioned)`.
#[pyfunction]
#[pyo3(signature = (values, u0, v, floor=None))]
fn laplace_curve(values: Vec<f64>, u0: f64, v: Vec<f64>, floor: Option<f64>) -> PyResult<(Vec<Complex64>, Vec<bool>)> {
    let curve = empirical_laplace_curve(&sample(values)?, u0, &v, floor).map_err(to_py)?;
    Ok((curve.values, curve.ill_conditioned))
}

/// Drift and intensity estimates `(mu_hat, lambda_hat)`.
#[pyfunction]
#[pyo3(signature = (values, u0=1.0, vn=5.0, eps=0.1, grid_m=50, weight="flat"))]
fn estimate_triplet(values: Vec<f64>, u0: f64, vn: f64, eps: f64, grid_m: usize, weight: &str) -> PyResult<(f64, f64)> {
    let c = config(u0, vn, eps, grid_m, 200, weight, false)?;
    let t = run_algorithm1(&sample(values)?, &c).map_err(to_py)?;
    Ok((t.mu_hat, t.lambda_hat))
}

/// Levy density estimate on `x`; returns a dict of lists plus the
/// parameter estimates.
#[pyfunction]
#[pyo3(signature = (values, x, u0=1.0, vn=5.0, eps=0.1, grid_m=50, density_grid_m=200, weight="flat", positive_part=false))]
#[allow(clippy::too_many_arguments)]
fn estimate_levy_density<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    x: Vec<f64>,
    u0: f64,
    vn: f64,
    eps: f64,
    grid_m: usize,
    density_grid_m: usize,
    weight: &str,
    positive_part: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let c = config(u0, vn, eps, grid_m, density_grid_m, weight, positive_part)?;
    let (t, est) = run_algorithm2(&sample(values)?, &c, &x).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("x", est.x)?;
    out.set_item("nu_hat", est.nu_hat)?;
    out.set_item("nu_bar_hat", est.nu_bar_hat)?;
    out.set_item("imag_residual", est.imag_residual)?;
    out.set_item("mu_hat", t.mu_hat)?;
    out.set_item("lambda_hat", t.lambda_hat)?;
    Ok(out)
}

#[pyfunction]
fn flat_top(x: f64) -> f64 {
    flat_top_kernel(x)
}

#[pyfunction]
fn complex_erf(z: Complex64) -> PyResult<Complex64> {
    special::complex_erf(z).map_err(to_py)
}

#[pyfunction]
fn complex_log_gamma(z: Complex64) -> PyResult<Complex64> {
    special::complex_log_gamma(z).map_err(to_py)
}

#[pymodule]
fn levy_mellin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate_beta, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_series, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_curve, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_triplet, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_levy_density, m)?)?;
    m.add_function(wrap_pyfunction!(flat_top, m)?)?;
    m.add_function(wrap_pyfunction!(complex_erf, m)?)?;
    m.add_function(wrap_pyfunction!(complex_log_gamma, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
