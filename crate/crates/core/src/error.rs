use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// An iterative eigensolver stopped without meeting its tolerance.
    #[error("{what} did not converge after {iterations} iterations (last estimate {last}, residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last: f64,
        residual: f64,
    },

    /// The Stieltjes fixed-point solver failed at `z`.
    #[error("Stieltjes solver did not converge at z = {z} after {iterations} iterations (last m = {last}, residual {residual:e})")]
    StieltjesNotConverged {
        z: Complex64,
        iterations: usize,
        last: Complex64,
        residual: f64,
    },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for failures of a numerical routine rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::StieltjesNotConverged { .. } | Error::Decomposition(_)
        )
    }
}
