//! Weight functions for the drift/intensity step and the regularizing
//! kernel of the Fourier inversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PLATEAU: f64 = 0.05;
const CONDITION_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    #[default]
    Flat,
    Epanechnikov,
}

/// A weight function supported on `[eps, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub eps: f64,
}

impl WeightSpec {
    pub fn new(kind: WeightKind, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(WeightSpec { kind, eps })
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        weight(self, alpha)
    }
}

/// Flat: indicator of `[eps, 1]`. Epanechnikov: `(1 - t^2)_+` with `t`
/// the affine map of `[eps, 1]` onto `[-1, 1]`.
pub fn weight(spec: &WeightSpec, alpha: f64) -> f64 {
    let eps = spec.eps;
    if !(alpha >= eps && alpha <= 1.0) {
        return 0.0;
    }
    match spec.kind {
        WeightKind::Flat => 1.0,
        WeightKind::Epanechnikov => {
            // (1 - t)(1 + t) with both factors formed directly, exact at the endpoints
            let width = 1.0 - eps;
            4.0 * (1.0 - alpha) * (alpha - eps) / (width * width)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// Equal to one on `|x| <= 0.05`, vanishing for `|x| >= 1`.
    #[default]
    FlatTop,
}

impl KernelSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            KernelSpec::FlatTop => flat_top(x),
        }
    }
}

/// The flat-top kernel
/// `exp(-exp(-1/(|x| - 0.05)) / (1 - |x|))` between its plateau and its
/// support edge.
pub fn flat_top(x: f64) -> f64 {
    let r = x.abs();
    if r <= PLATEAU {
        1.0
    } else if r < 1.0 {
        (-(-1.0 / (r - PLATEAU)).exp() / (1.0 - r)).exp()
    } else {
        0.0
    }
}

fn condition_grid() -> impl Iterator<Item = f64> {
    // even point count, so 0 is never hit
    (0..CONDITION_GRID).map(|k| -1.0 + 2.0 * k as f64 / (CONDITION_GRID - 1) as f64)
}

/// Checks `|1 - K(x)| <= A |x|^s` on a 10^4-point grid of `[-1, 1]`.
pub fn verify_kernel_condition(spec: &KernelSpec, s: u32, a: f64) -> bool {
    condition_grid().all(|x| (1.0 - spec.eval(x)).abs() <= a * x.abs().powi(s as i32))
}

/// Smallest `A` for which [`verify_kernel_condition`] holds at order `s`.
pub fn kernel_condition_constant(spec: &KernelSpec, s: u32) -> f64 {
    condition_grid()
        .map(|x| (1.0 - spec.eval(x)).abs() / x.abs().powi(s as i32))
        .fold(0.0, f64::max)
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(WeightKind::Flat),
            "epanechnikov" => Ok(WeightKind::Epanechnikov),
            other => Err(Error::Parse(format!("unknown weight '{other}' (expected flat or epanechnikov)"))),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat_top" => Ok(KernelSpec::FlatTop),
            other => Err(Error::Parse(format!("unknown kernel '{other}' (expected flat_top)"))),
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Flat => "flat",
            WeightKind::Epanechnikov => "epanechnikov",
        })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("flat_top")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_weight_is_an_indicator() {
        let w = WeightSpec::new(WeightKind::Flat, 0.1).unwrap();
        assert_eq!(w.eval(0.5), 1.0);
        assert_eq!(w.eval(0.05), 0.0);
        assert_eq!(w.eval(0.1), 1.0);
        assert_eq!(w.eval(1.0), 1.0);
        assert_eq!(w.eval(1.01), 0.0);
    }

    #[test]
    fn epanechnikov_peaks_at_midpoint() {
        let w = WeightSpec::new(WeightKind::Epanechnikov, 0.1).unwrap();
        assert!((w.eval(0.55) - 1.0).abs() < 1e-15);
        assert_eq!(w.eval(0.1), 0.0);
        assert_eq!(w.eval(1.0), 0.0);
        assert!((w.eval(0.325) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn weight_spec_validates_eps() {
        assert!(WeightSpec::new(WeightKind::Flat, 0.0).is_err());
        assert!(WeightSpec::new(WeightKind::Flat, 1.0).is_err());
    }

    #[test]
    fn flat_top_branches() {
        assert_eq!(flat_top(0.03), 1.0);
        assert_eq!(flat_top(0.05), 1.0);
        assert_eq!(flat_top(1.0), 0.0);
        assert_eq!(flat_top(1.2), 0.0);
        let want = (-2.0 * (-1.0f64 / 0.45).exp()).exp();
        assert!((flat_top(0.5) - want).abs() < 1e-15);
        assert!((flat_top(0.5) - 0.805_142_461_475_696_5).abs() < 1e-15);
    }

    #[test]
    fn flat_top_is_continuous_at_branch_points() {
        assert!((flat_top(0.05 + 1e-9) - 1.0).abs() < 1e-12);
        assert!(flat_top(1.0 - 1e-9) < 1e-12);
    }

    #[test]
    fn kernel_condition_examples() {
        let k = KernelSpec::FlatTop;
        assert!(verify_kernel_condition(&k, 0, 1.0));
        assert!(verify_kernel_condition(&k, 4, 1.0 / 0.05f64.powi(4)));
        assert!(!verify_kernel_condition(&k, 1, 1e-9));
        for s in 0..6 {
            let a = kernel_condition_constant(&k, s);
            assert!(a.is_finite() && verify_kernel_condition(&k, s, a));
        }
    }

    #[test]
    fn names_round_trip() {
        for w in [WeightKind::Flat, WeightKind::Epanechnikov] {
            assert_eq!(w.to_string().parse::<WeightKind>().unwrap(), w);
        }
        assert_eq!("flat_top".parse::<KernelSpec>().unwrap(), KernelSpec::FlatTop);
        assert!("gaussian".parse::<KernelSpec>().is_err());
        assert!("box".parse::<WeightKind>().is_err());
    }
}
