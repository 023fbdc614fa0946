//! Comparison methods: exact recursive least squares (supports deletions),
//! uniform row sampling and exact-leverage row sampling.

mod kalman;
mod sampler;

use thiserror::Error;

use crate::matcore::LinalgError;

pub use kalman::{kalman_delete, kalman_insert, KalmanState, DOWNDATE_FLOOR};
pub use sampler::{
    exact_leverage_insert, leverage_probability, uniform_insert, LeverageReference, RowSamplerState, SamplerPolicy,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("deleting row {index} would make the Gram matrix singular")]
    SingularAfterDelete { index: usize },
    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
