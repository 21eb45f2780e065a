use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or inconsistent input data.
    Data,
    /// Numerical breakdown: rank deficiency, divergence, singular recursion.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("irregular spacing: expected a sample at {expected}, found {found} (line {line})")]
    IrregularSpacing {
        line: usize,
        expected: String,
        found: String,
    },

    #[error("line {line}: negative irradiance {value}")]
    NegativeIrradiance { line: usize, value: f64 },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero standard deviation: training series is constant")]
    ZeroSigma,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("horizon {0} was not fitted")]
    UnfittedHorizon(usize),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("rank-deficient design matrix (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("singular Durbin-Levinson step at lag {lag} (prediction error variance {variance:.3e})")]
    SingularRecursion { lag: usize, variance: f64 },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::RankDeficient { .. }
            | Error::SingularRecursion { .. }
            | Error::Divergence { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
