//! Benchmark harness: synthetic data from the elliptical model, CSV
//! ingestion, a runner that streams rows into each method and times the
//! update loop, and CSV output of the results.

mod datagen;
mod ingest;
mod results;
mod runner;
mod timing;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::dynlsr::DynLsrError;
use crate::matcore::LinalgError;

pub use datagen::{elliptical_generate, gaussian_stream, EllipticalConfig, ResidualAdversary, RowSource};
pub use ingest::{ingest_csv, ingest_csv_reader, LabelColumn, ParseError};
pub use results::{emit_plot_data, emit_results, parse_results, BenchRecord};
pub use runner::{
    compress_initial_block, median, run_adaptive, run_adaptive_sweep, run_experiment, run_experiment_traced, run_sweep, BenchCell,
    Dataset, RunOptions, DEFAULT_INIT_FRACTION, OURS_K_MAX,
};
pub use timing::{Section, Timeline};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("timed sections overlap: {0}")]
    TimingOverlap(String),
    #[error(transparent)]
    DynLsr(#[from] DynLsrError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Solver compared in a benchmark cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Kalman,
    Ours,
    RowSampling,
    Uniform,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Kalman, Method::Ours, Method::RowSampling, Method::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            Method::Kalman => "kalman",
            Method::Ours => "ours",
            Method::RowSampling => "row-sampling",
            Method::Uniform => "uniform",
        }
    }

    /// Default parameter grid: `ε` for the leverage methods, `p` for uniform.
    pub fn default_params(self) -> &'static [f64] {
        match self {
            Method::Kalman => &[0.0],
            Method::Ours | Method::RowSampling => &[0.1, 0.2, 0.5, 1.0],
            Method::Uniform => &[0.05, 0.1, 0.2, 0.5],
        }
    }

    pub fn takes_parameter(self) -> bool {
        self != Method::Kalman
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kalman" => Ok(Method::Kalman),
            "ours" => Ok(Method::Ours),
            "row-sampling" | "rowsampling" | "row_sampling" => Ok(Method::RowSampling),
            "uniform" => Ok(Method::Uniform),
            other => Err(BenchError::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn method_order_is_alphabetical() {
        let mut names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        names.sort();
        let ordered: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        assert_eq!(names, ordered);
    }
}
