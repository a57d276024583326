use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    /// Ridgeless interpolation at `α = 1` with a nonzero tail or noise: the
    /// variance is infinite.
    #[error("singular regime at degree {r}: infinite variance at the interpolation threshold")]
    SingularRegime { r: usize },

    #[error("quadrature on [{lo}, {hi}] did not reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { lo: f64, hi: f64, tol: f64, err: f64 },

    #[error("closed form {closed} disagrees with quadrature {quadrature} (|diff| = {diff:e})")]
    ClosedFormMismatch { closed: f64, quadrature: f64, diff: f64 },

    /// Cholesky failed for every diagonal shift tried.
    #[error("kernel matrix is not positive definite after jitter ladder {jitters:?}")]
    Factorization { jitters: Vec<f64> },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("learning curve term r = {r}, m = {m}: {source}")]
    CurveTerm {
        r: usize,
        m: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
