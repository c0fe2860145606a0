//! Krylov solvers measured in relative backward error.
//!
//! Every solver in this crate reports, traces and stops on
//!
//! ```text
//! berr(x) = ‖Ax − b‖₂ / (‖A‖₂ ‖x‖₂)
//! ```
//!
//! the smallest relative spectral-norm perturbation of `A` for which `x` is an
//! exact solution. Besides the classical baselines (Richardson, CG, MINRES,
//! LSQR) the crate provides MINBERR, which minimizes backward error over the
//! Krylov subspace of a symmetric positive semidefinite system, and MINBERR-NE,
//! its normal-equation counterpart for general square systems.
//!
//! All numerical code is generic over [`Scalar`]; the aliases at the crate root
//! fix the scalar to `f64`, which is what the solvers are tuned and tested for.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backward_error;
pub mod cheb;
pub mod classical;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod minberr;
pub mod problems;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Field, Scalar};

pub use backward_error::{backward_error, composition_bound, forward_to_backward_bound, BerrValue};
pub use classical::{
    cg, lsqr, minres, regularized_solve, richardson, richardson_ne, InnerSolver, SolveResult,
    SolveTrace, SolverConfig, Termination, TracePoint,
};
pub use krylov::{BidiagState, LanczosState, Reorthogonalization};
pub use linalg::{estimate_spectral_norm, LinearOperator, NormEstimate};
pub use minberr::{
    berr_certificate, dense_minberr_oracle, minberr_ne_perturbed, minberr_ne_solve, minberr_solve,
    MinberrConfig, MinberrResult,
};
pub use problems::{ProblemInstance, ProblemMeta};
pub use spectral::{inverse_iteration, UpperBand};

/// Double-precision linear operator.
pub type Operator = linalg::LinearOperator<f64>;
/// Double-precision dense matrix.
pub type Dense = linalg::DenseMatrix<f64>;
/// Double-precision compressed-sparse-row matrix.
pub type Csr = linalg::CsrMatrix<f64>;
/// Double-precision problem instance.
pub type Problem = problems::ProblemInstance<f64>;
/// Double-precision solver configuration.
pub type Config = classical::SolverConfig<f64>;
/// Double-precision classical solve result.
pub type Solution = classical::SolveResult<f64>;
/// Double-precision MINBERR configuration.
pub type MinberrOptions = minberr::MinberrConfig<f64>;
/// Double-precision MINBERR result.
pub type MinberrSolution = minberr::MinberrResult<f64>;
/// Double-precision convergence trace.
pub type Trace = classical::SolveTrace<f64>;
