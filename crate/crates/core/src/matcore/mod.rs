//! Dense linear algebra used by the rest of the crate: row-major matrices,
//! Cholesky with rank-1 updates, normal-equation solves and symmetric
//! eigendecompositions (backed by `nalgebra`).

mod dense;
mod factor;
mod spectral;

use thiserror::Error;

pub use dense::{axpy, dot, norm, scaled, sub, DenseMatrix, DenseVector};
pub use factor::{normal_equation_solve, solve_gram, spd_inverse, Cholesky, CONDITION_FLOOR, JITTER_SCALE};
pub use spectral::{
    check_orthonormal, eig_sym, generalized_eigen_range, orthonormal_complement, project, random_orthonormal,
    spectral_approx_check, SymmetricEigen, ORTHONORMAL_TOL, SPECTRAL_SLACK, SYMMETRY_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Gram matrix is singular or too ill-conditioned to solve")]
    SingularGram,
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
}
