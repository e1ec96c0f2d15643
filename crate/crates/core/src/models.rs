//! Parametric Lévy subordinators with finite jump activity.
//!
//! Two families are provided:
//!
//! * `CpExp`: drift `mu` plus compound-Poisson jumps with Lévy density
//!   `a b exp(-b x)` on `x > 0` (total jump mass `a`);
//! * `TruncNormCp`: `xi_t = -log(q) * (eta_1 + ... + eta_{N_t})` with `N` a
//!   Poisson process of rate `lambda` and `eta_k` standard normal truncated
//!   to `(alpha, inf)`.
//!
//! Both carry their exact Laplace exponent `phi(z) = -log E exp(-z xi_1)`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{faddeeva, normal_pdf, normal_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SubordinatorModel {
    CpExp { mu: f64, a: f64, b: f64 },
    TruncNormCp { lambda: f64, q: f64, alpha: f64 },
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl SubordinatorModel {
    pub fn cp_exp(mu: f64, a: f64, b: f64) -> Result<Self> {
        let m = SubordinatorModel::CpExp { mu, a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn trunc_norm_cp(lambda: f64, q: f64, alpha: f64) -> Result<Self> {
        let m = SubordinatorModel::TruncNormCp { lambda, q, alpha };
        m.validate()?;
        Ok(m)
    }

    /// Parses and validates a JSON model description such as
    /// `{"model":"cp_exp","mu":1.8,"a":0.7,"b":0.2}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: SubordinatorModel = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SubordinatorModel::CpExp { mu, a, b } => {
                require(mu.is_finite() && mu >= 0.0, || format!("drift mu must be >= 0, got {mu}"))?;
                require(a.is_finite() && a > 0.0, || format!("jump mass a must be > 0, got {a}"))?;
                require(b.is_finite() && b > 0.0, || format!("jump rate b must be > 0, got {b}"))
            }
            SubordinatorModel::TruncNormCp { lambda, q, alpha } => {
                require(lambda.is_finite() && lambda > 0.0, || {
                    format!("intensity lambda must be > 0, got {lambda}")
                })?;
                require(q > 0.0 && q < 1.0, || format!("base q must lie in (0, 1), got {q}"))?;
                require(alpha.is_finite() && alpha > 0.0, || {
                    format!("truncation alpha must be > 0, got {alpha}")
                })
            }
        }
    }

    /// Drift `mu` of the subordinator.
    pub fn drift(&self) -> f64 {
        match *self {
            SubordinatorModel::CpExp { mu, .. } => mu,
            SubordinatorModel::TruncNormCp { .. } => 0.0,
        }
    }

    /// Total mass `lambda = nu(R+)` of the Lévy measure.
    pub fn total_mass(&self) -> f64 {
        match *self {
            SubordinatorModel::CpExp { a, .. } => a,
            SubordinatorModel::TruncNormCp { lambda, .. } => lambda,
        }
    }

    /// Lévy density of `xi`; zero off the jump support.
    ///
    /// For `TruncNormCp` the jumps of `xi` are `kappa * eta` with
    /// `kappa = -log q`, so the density is
    /// `lambda p(x / kappa) / (kappa (1 - F(alpha)))` on `x > kappa alpha`.
    pub fn levy_density(&self, x: f64) -> f64 {
        match *self {
            SubordinatorModel::CpExp { a, b, .. } => {
                if x > 0.0 {
                    a * b * (-b * x).exp()
                } else {
                    0.0
                }
            }
            SubordinatorModel::TruncNormCp { lambda, q, alpha } => {
                let kappa = -q.ln();
                if x > kappa * alpha {
                    lambda * normal_pdf(x / kappa) / (kappa * normal_sf(alpha))
                } else {
                    0.0
                }
            }
        }
    }

    /// Intensity-weighted density of the jump law before scaling by
    /// `-log q`: `lambda p(x) / (1 - F(alpha))` on `x > alpha`. Equal to
    /// [`levy_density`](Self::levy_density) for `CpExp`.
    pub fn jump_law_density(&self, x: f64) -> f64 {
        match *self {
            SubordinatorModel::CpExp { .. } => self.levy_density(x),
            SubordinatorModel::TruncNormCp { lambda, alpha, .. } => {
                if x > alpha {
                    lambda * normal_pdf(x) / normal_sf(alpha)
                } else {
                    0.0
                }
            }
        }
    }

    /// Damped Lévy density `exp(-u0 x) nu(x)`.
    pub fn levy_density_bar(&self, x: f64, u0: f64) -> f64 {
        let nu = self.levy_density(x);
        if nu == 0.0 {
            0.0
        } else {
            (-u0 * x).exp() * nu
        }
    }

    /// Laplace exponent `phi(z) = -log E[exp(-z xi_1)]`.
    ///
    /// Admissible region: `Re z > -b` for `CpExp` (pole at `-b`), `Re z >= 0`
    /// for `TruncNormCp`.
    pub fn laplace_exponent(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite argument {z}")));
        }
        match *self {
            SubordinatorModel::CpExp { mu, a, b } => {
                let denom = z + b;
                if denom.norm() == 0.0 {
                    return Err(Error::Pole(z));
                }
                if z.re <= -b {
                    return Err(Error::Domain(format!("Re z must exceed -b = {}, got {z}", -b)));
                }
                Ok(z * (mu + a / denom))
            }
            SubordinatorModel::TruncNormCp { lambda, q, alpha } => {
                if z.re < 0.0 {
                    return Err(Error::Domain(format!("Re z must be >= 0, got {z}")));
                }
                Ok(lambda * (Complex64::new(1.0, 0.0) - trunc_norm_mgf_ratio(z * q.ln(), alpha)))
            }
        }
    }

    /// Characteristic exponent `psi(v) = -log E[exp(i v xi_1)] = phi(-iv)`.
    pub fn characteristic_exponent(&self, v: f64) -> Complex64 {
        self.laplace_exponent(Complex64::new(0.0, -v))
            .expect("the imaginary axis is admissible for both model families")
    }

    /// Exact Fourier transform `F[nu_bar](v) = int exp(ivx) exp(-u0 x) nu(x) dx`,
    /// read off from `phi(u0 - iv) = lambda + mu (u0 - iv) - F[nu_bar](v)`.
    pub fn fourier_nu_bar(&self, u0: f64, v: f64) -> Result<Complex64> {
        let z = Complex64::new(u0, -v);
        Ok(self.total_mass() + self.drift() * z - self.laplace_exponent(z)?)
    }
}

/// `E[exp(s eta)]` for `eta` standard normal truncated to `(alpha, inf)`:
/// `exp(s^2/2) (1 - F(alpha - s)) / (1 - F(alpha))`, valid for `Re s <= 0`.
///
/// The normal tail is `erfc(w / sqrt 2) / 2` and `erfc(u) = exp(-u^2) w(iu)`,
/// which folds the Gaussian factor into `exp(alpha s - alpha^2 / 2)` and keeps
/// every factor in range.
fn trunc_norm_mgf_ratio(s: Complex64, alpha: f64) -> Complex64 {
    let shifted = Complex64::new(alpha, 0.0) - s;
    let w = faddeeva(Complex64::new(-shifted.im, shifted.re) / SQRT_2);
    0.5 * (alpha * s - 0.5 * alpha * alpha).exp() * w / normal_sf(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_complex;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn example_cp() -> SubordinatorModel {
        SubordinatorModel::cp_exp(1.8, 0.7, 0.2).unwrap()
    }

    fn example_tn() -> SubordinatorModel {
        SubordinatorModel::trunc_norm_cp(1.0, 0.5, 0.1).unwrap()
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(SubordinatorModel::cp_exp(-0.1, 0.7, 0.2).is_err());
        assert!(SubordinatorModel::cp_exp(0.0, 0.0, 0.2).is_err());
        assert!(SubordinatorModel::cp_exp(0.0, 0.7, -1.0).is_err());
        assert!(SubordinatorModel::trunc_norm_cp(1.0, 1.0, 0.1).is_err());
        assert!(SubordinatorModel::trunc_norm_cp(1.0, 0.5, 0.0).is_err());
        assert!(SubordinatorModel::trunc_norm_cp(0.0, 0.5, 0.1).is_err());
        assert!(SubordinatorModel::cp_exp(0.0, 0.7, 0.2).is_ok());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = SubordinatorModel::from_json_str(r#"{"model":"cp_exp","mu":1.8,"a":0.7,"b":0.2}"#).unwrap();
        assert_eq!(m, example_cp());
        let t = SubordinatorModel::from_json_str(r#"{"model":"trunc_norm_cp","lambda":1.0,"q":0.5,"alpha":0.1}"#)
            .unwrap();
        assert_eq!(t, example_tn());
        assert!(SubordinatorModel::from_json_str(r#"{"model":"cp_exp","mu":-1,"a":0.7,"b":0.2}"#).is_err());
        assert!(SubordinatorModel::from_json_str(r#"{"model":"gamma"}"#).is_err());
    }

    #[test]
    fn cp_exp_density() {
        let m = example_cp();
        for x in [0.1, 1.0, 7.5] {
            assert!((m.levy_density(x) - 0.14 * (-0.2 * x).exp()).abs() < 1e-16);
        }
        assert_eq!(m.levy_density(-1.0), 0.0);
        assert_eq!(m.levy_density(0.0), 0.0);
        assert_eq!(example_tn().levy_density(-1.0), 0.0);
    }

    #[test]
    fn trunc_norm_jump_law_density_against_statrs() {
        use statrs::distribution::{Continuous, ContinuousCDF, Normal};
        let n = Normal::standard();
        let expected = n.pdf(0.5) / (1.0 - n.cdf(0.1));
        assert!((example_tn().jump_law_density(0.5) - expected).abs() < 1e-13);
        assert_eq!(example_tn().jump_law_density(0.1), 0.0);
        // xi-scale density is the jump law pushed through x -> kappa x
        let kappa = 2f64.ln();
        let x = 0.5;
        assert!((example_tn().levy_density(x) - n.pdf(x / kappa) / (kappa * (1.0 - n.cdf(0.1)))).abs() < 1e-13);
    }

    #[test]
    fn laplace_exponent_reference_values() {
        let v = example_cp().laplace_exponent(c(1.0, 0.0)).unwrap();
        assert!((v.re - (1.8 + 0.7 / 1.2)).abs() < 1e-15 && v.im == 0.0);
        assert_eq!(example_cp().laplace_exponent(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(example_tn().laplace_exponent(c(0.0, 0.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn cp_exp_pole_and_domain() {
        assert!(matches!(example_cp().laplace_exponent(c(-0.2, 0.0)), Err(Error::Pole(_))));
        assert!(matches!(example_cp().laplace_exponent(c(-0.5, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(example_tn().laplace_exponent(c(-0.1, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn trunc_norm_exponent_matches_quadrature_of_levy_measure() {
        // phi(z) = int (1 - e^{-zx}) nu(x) dx, nu on (kappa alpha, inf)
        let m = example_tn();
        let kappa = 2f64.ln();
        for z in [c(2.0, 0.0), c(1.0, 3.0), c(0.5, -5.0)] {
            let quad = integrate_complex(
                |x| (Complex64::new(1.0, 0.0) - (-z * x).exp()) * m.levy_density(x),
                kappa * 0.1,
                kappa * 12.0,
                1e-13,
            );
            let phi = m.laplace_exponent(z).unwrap();
            assert!((quad - phi).norm() < 1e-10, "z = {z}: {quad} vs {phi}");
        }
    }

    #[test]
    fn fourier_nu_bar_closed_form_for_cp_exp() {
        let m = example_cp();
        for v in [-3.0, 0.0, 2.5] {
            let f = m.fourier_nu_bar(1.0, v).unwrap();
            let exact = c(0.14, 0.0) / c(1.2, -v);
            assert!((f - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn characteristic_exponent_is_phi_on_imaginary_axis() {
        let m = example_tn();
        let psi = m.characteristic_exponent(1.7);
        assert!((psi - m.laplace_exponent(c(0.0, -1.7)).unwrap()).norm() < 1e-15);
        assert!(psi.re >= 0.0);
    }
}
