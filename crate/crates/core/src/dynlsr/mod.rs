//! Insertion-only dynamic least squares with online leverage sampling.
//!
//! Each arriving row `m = [a; β]` gets a leverage estimate `τ = ‖B̃ m‖²`
//! from a JL sketch of the current kept rows. It is kept with probability
//! `p = min(C·τ, 1)` and reweighted by `1/√p`. The weighted normal
//! equations are updated by Sherman-Morrison, so the solution stays current
//! at `O(d²)` cost per kept row plus the sketch refresh.

mod config;
mod snapshot;
mod state;

use thiserror::Error;

use crate::matcore::LinalgError;
use crate::sketch::SketchError;

pub use config::{Mode, SamplerConfig, SamplingRule, SketchBackend, JL_EPS};
pub use snapshot::MAGIC;
pub use state::{
    estimate_sigma_bounds, exact_online_leverage, singular_value_range, LeverageEstimate, LsrSketchState,
    SampleRecord,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynLsrError {
    #[error("initial block is rank deficient: smallest singular value {found:e} below {required:e}")]
    RankDeficientInit { found: f64, required: f64 },
    #[error("insertion horizon of {horizon} rows exceeded")]
    HorizonExceeded { horizon: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

impl From<std::io::Error> for DynLsrError {
    fn from(e: std::io::Error) -> Self {
        DynLsrError::Snapshot(e.to_string())
    }
}
