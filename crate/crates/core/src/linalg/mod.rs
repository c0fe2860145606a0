//! Vectors, matrix backends and the matrix-free operator every solver goes through.

mod dense;
mod norm;
mod operator;
mod orthogonal;
pub mod random;
mod sparse;
pub mod vector;

pub use dense::DenseMatrix;
pub use norm::{estimate_spectral_norm, NormEstimate, DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_REL_TOL};
pub use operator::{Backing, LinearOperator};
pub use orthogonal::Orthogonal;
pub use sparse::CsrMatrix;
pub use vector::{axpy, dot, norm2};
