use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions, invalid parameters or violated preconditions.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("measurement record too short: need {needed} samples, got {got}")]
    RecordTooShort { needed: usize, got: usize },

    #[error("matrix exponential produced non-finite entries")]
    NumericalOverflow,

    #[error("ill-conditioned linear system (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    /// The coordinate descent iterate left the finite range. The last iterate is attached.
    #[error("solver produced non-finite values after {sweeps} sweeps")]
    NonFinite {
        sweeps: usize,
        iterate: Vec<Complex64>,
    },

    #[error("true support is empty; TPR/FPR are undefined")]
    UndefinedMetric,

    #[error("bin {bin}: {source}")]
    AtBin {
        bin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("seed {seed}, alpha {alpha}: {source}")]
    AtRealization {
        seed: u64,
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalOverflow | Error::IllConditioned { .. } | Error::NonFinite { .. } => {
                true
            }
            Error::AtBin { source, .. } | Error::AtRealization { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}
