//! Nonparametric estimation of the characteristics of a Lévy subordinator
//! from stationary observations of a generalized Ornstein-Uhlenbeck process,
//! via the Mellin transform of the exponential functional
//! `A = int_0^inf exp(-xi_t) dt`.
//!
//! The Mellin transform `M(z) = E[A^{z-1}]` satisfies
//! `M(z) = phi(z)/z * M(z + 1)`, so `z M(z)/M(z + 1)` recovers the Laplace
//! exponent `phi` of `xi`. Replacing `M` by its empirical version gives an
//! estimate of `phi`, from which the drift, the jump intensity and the Lévy
//! density are extracted.

pub mod error;
pub mod estimators;
pub mod io;
pub mod kernels;
pub mod mellin;
pub mod models;
pub mod quad;
pub mod rates;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
pub use estimators::{
    invert_levy_density, run_algorithm1, run_algorithm2, EstimationConfig, FourierSamples, LevyDensityEstimate,
    TripletEstimate,
};
pub use kernels::{KernelSpec, WeightKind, WeightSpec};
pub use mellin::{empirical_mellin, laplace_curve, laplace_estimate, LaplaceCurve};
pub use models::SubordinatorModel;
pub use num_complex::Complex64;
pub use rates::{rate_study, MiseReport, RateStudyConfig};
pub use sampling::{Sample, SeriesTruncationPolicy};
