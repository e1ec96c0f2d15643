use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pole at z = {0}")]
    Pole(Complex64),

    #[error("z = {0} lies outside the accuracy envelope |Im z| <= 30")]
    Accuracy(Complex64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series not converged after {terms} terms (tail bound / partial sum = {ratio:e})")]
    Truncation { terms: usize, ratio: f64 },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Whether the failure comes from the numerical pipeline rather than
    /// from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Pole(_) | Error::Accuracy(_) | Error::Truncation { .. } | Error::DegenerateWeights(_)
        )
    }
}
