use thiserror::Error;

use crate::sdp::SdpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: skew part {skew:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { skew: f64, tol: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver did not converge for a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not an isometry: |V*V - I| = {0:.3e}")]
    NotIsometry(f64),

    #[error("candidate is not an incompatibility witness (slack {slack:.3e})")]
    NotAWitness { slack: f64 },

    #[error("{context}: solver returned {status:?}")]
    Solver { context: String, status: SdpStatus },

    #[error("malformed JSON at `{path}`: {message}")]
    Json { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures that originate in numerics rather than in the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EigenNoConvergence(_) | Error::Solver { .. })
    }
}
