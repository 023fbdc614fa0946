//! Executable versions of the lower-bound constructions: Boolean OMv through
//! a well-conditioned real matrix, spectral splitting into projections,
//! amplification of weak projection oracles, the regression gadget that
//! answers projection queries, and recovery of matrix-vector products from
//! an incremental solver.
//!
//! Everything here is a correctness verifier at desk scale, not a timing
//! experiment.

mod amplify;
mod boolean_omv;
mod gadget;
mod incremental;
mod oracle;
mod split;
mod verify;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::matcore::LinalgError;

pub use amplify::{amplify_projection, amplify_traced, default_rounds, AmplifyTrace, RoundTrace};
pub use boolean_omv::{boolean_omv_gadget, omv_block_matrix, BoolMatrix};
pub use gadget::{
    lsr_projection_oracle, DenseGadgetSolver, GadgetSolution, GadgetSolver, LsrGadgetState, LsrProjection,
    PerturbedSolver, StructuredSolver, GADGET_EPSILON,
};
pub use incremental::{incremental_instance, incremental_omv_recover, kalman_solver, IncrementalSolver};
pub use oracle::{ExactMv, ExactProjection, MvOracle, NoisyMv, NoisyProjection, ProjectionOracle};
pub use split::{omv_via_projection, random_symmetric_with_spectrum, split_spectrum, SpectralSplit, SplitMv};
pub use verify::{
    amplify_max_error, verify_amplify, verify_boolean_omv, verify_incremental, verify_lsr_gadget, verify_omv_projection, Construction,
    VerificationReport, AMPLIFY_C, AMPLIFY_ERR_D2, GADGET_C_R, INCREMENTAL_C_I, OMV_PROJECTION_C,
};

/// Largest dimension the verifiers accept.
pub const MAX_DIM: usize = 256;

/// Largest number of online queries the verifiers accept.
pub const MAX_QUERIES: usize = 1000;

/// Slack on eigenvalue range checks.
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("eigenvalue {value} at index {index} is outside [{lo}, {hi}]")]
    EigenvalueOutOfRange { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} = {value} exceeds the cap of {cap}")]
    TooLarge { what: &'static str, value: usize, cap: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<BaselineError> for ReductionError {
    fn from(e: BaselineError) -> Self {
        ReductionError::SolverFailure(e.to_string())
    }
}

pub(crate) fn check_dim(d: usize) -> Result<(), ReductionError> {
    if d == 0 {
        return Err(ReductionError::InvalidParameter("dimension must be positive".into()));
    }
    if d > MAX_DIM {
        return Err(ReductionError::TooLarge { what: "d", value: d, cap: MAX_DIM });
    }
    Ok(())
}

pub(crate) fn check_queries(t: usize) -> Result<(), ReductionError> {
    if t > MAX_QUERIES {
        return Err(ReductionError::TooLarge { what: "T", value: t, cap: MAX_QUERIES });
    }
    Ok(())
}
