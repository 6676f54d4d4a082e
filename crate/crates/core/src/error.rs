use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) differ by {deviation:e}")]
    NotHermitian { i: usize, j: usize, deviation: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("unsupported matrix dimension {0} (expected 2..=4)")]
    UnsupportedDimension(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular state: {0}")]
    SingularState(String),

    #[error("non-finite integrand value {value} at {point:?}")]
    NonFiniteIntegrand { point: Vec<f64>, value: f64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e} after {evals} evaluations")]
    QuadratureFailure { value: f64, error: f64, evals: u64 },

    #[error("unknown prior name `{0}`")]
    UnknownPrior(String),

    #[error("normalization is not finite: {0}")]
    NonFiniteNormalization(String),

    #[error("zero evidence: likelihood vanishes almost everywhere under the prior")]
    ZeroEvidence,

    #[error("relative entropy diverges: {0}")]
    Divergent(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
