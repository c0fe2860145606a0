use thiserror::Error;

/// Errors raised by operators, solvers and problem construction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is zero; its spectral norm cannot normalize a backward error")]
    ZeroOperator,

    #[error("backward error is undefined at x = 0")]
    UndefinedAtZero,

    #[error("operator norm must be positive, got {0}")]
    NonPositiveOpnorm(f64),

    #[error("right-hand side is zero")]
    ZeroRhs,

    #[error("solver requires a symmetric operator")]
    RequiresSymmetric,

    #[error("regularized CG/MINRES needs k >= 9, got k = {0}")]
    TheoremRequiresK9(usize),

    #[error("factorization step requested after breakdown")]
    PostBreakdown,

    #[error("banded matrix has a zero diagonal entry at index {0}")]
    SingularBand(usize),

    #[error("recovery scalar alpha vanished: b lies in the null space of A")]
    DegenerateAlpha,

    #[error(
        "no finite minimizer: b is orthogonal to A·span(Q); infimum of the backward error is 1"
    )]
    NoFiniteMinimizer,

    #[error("Aᵀb = 0: the normal-equation Krylov subspace is empty")]
    OrthogonalRhs,

    #[error("the subspace contains an exact solution")]
    ExactSolutionInSubspace { x: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
