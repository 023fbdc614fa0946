//! Dynamic least-squares regression.
//!
//! Rows arrive one at a time and the solver keeps an approximate minimizer of
//! `||A x - b||` current after every arrival. The main structure
//! ([`dynlsr::LsrSketchState`]) keeps only rows picked by online leverage
//! sampling, with leverage estimated through a Johnson-Lindenstrauss sketch.
//!
//! Also included: exact and sampling baselines ([`baselines`]), executable
//! lower-bound constructions ([`reductions`]) and a benchmark harness ([`bench`]).

pub mod baselines;
pub mod bench;
pub mod dynlsr;
pub mod matcore;
pub mod reductions;
pub mod rng;
pub mod sketch;
