use thiserror::Error;

/// Errors raised across the modelling, spectral and sampling layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter outside prior support: {0}")]
    Domain(String),
    #[error("index out of range: {what} = {index}, limit {limit}")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("repeated or defective eigenvalues (relative spread {spread:.3e})")]
    Degenerate { spread: f64 },
    #[error("singular resolvent at omega = {omega}")]
    Singular { omega: f64 },
    #[error("unstable drift matrix: eigenvalue real part {max_real_part}")]
    Unstable { max_real_part: f64 },
    #[error("non-finite evaluation at theta = {theta:?}")]
    Evaluation { theta: Vec<f64> },
    #[error("dual-number eigendecomposition is only available for 2x2 systems (got {0}x{0})")]
    DualEigenUnsupported(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
