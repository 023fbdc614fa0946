use crate::matcore::{norm, DenseVector, LinalgError};

use super::oracle::ProjectionOracle;
use super::ReductionError;

/// Default `R = K = ceil(2 log₂ d)`, which gives `α^K < β` at `α = 1/3`,
/// `β = 1/d³`.
pub fn default_rounds(d: usize) -> usize {
    ((2.0 * (d.max(2) as f64).log2()).ceil() as usize).max(1)
}

/// One outer round: the round's input `z_r` and the inner iterates
/// `w_{r,0}, …, w_{r,K}`.
#[derive(Clone, Debug)]
pub struct RoundTrace {
    pub z: DenseVector,
    pub w: Vec<DenseVector>,
}

/// Iterates of one amplification run on the normalized query.
#[derive(Clone, Debug)]
pub struct AmplifyTrace {
    pub rounds: Vec<RoundTrace>,
    /// `z_{R+1}` for the normalized query.
    pub output: DenseVector,
    /// `‖z‖`, by which `output` is multiplied to give the answer.
    pub scale: f64,
}

/// Sharpens two weak projection oracles (onto `U` and `U_⊥`) into an
/// accurate projection onto `U`. With `(1/3, β)` oracles the error is
/// `O(R K² β)`.
pub fn amplify_projection(
    z: &[f64],
    p_u: &mut dyn ProjectionOracle,
    p_perp: &mut dyn ProjectionOracle,
    rounds: usize,
    iters: usize,
) -> Result<DenseVector, ReductionError> {
    let t = run(z, p_u, p_perp, rounds, iters, false)?;
    Ok(t.output.iter().map(|v| v * t.scale).collect())
}

/// [`amplify_projection`] keeping every iterate.
pub fn amplify_traced(
    z: &[f64],
    p_u: &mut dyn ProjectionOracle,
    p_perp: &mut dyn ProjectionOracle,
    rounds: usize,
    iters: usize,
) -> Result<AmplifyTrace, ReductionError> {
    run(z, p_u, p_perp, rounds, iters, true)
}

fn run(
    z: &[f64],
    p_u: &mut dyn ProjectionOracle,
    p_perp: &mut dyn ProjectionOracle,
    rounds: usize,
    iters: usize,
    keep: bool,
) -> Result<AmplifyTrace, ReductionError> {
    let d = z.len();
    if p_u.dim() != d || p_perp.dim() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: p_u.dim().max(p_perp.dim()) }.into());
    }
    if rounds == 0 || iters == 0 {
        return Err(ReductionError::InvalidParameter("R and K must be positive".into()));
    }
    let scale = norm(z);
    if scale == 0.0 {
        return Ok(AmplifyTrace { rounds: Vec::new(), output: DenseVector::zeros(d), scale });
    }
    let mut zr: DenseVector = z.iter().map(|v| v / scale).collect();
    let mut trace = Vec::new();
    for _ in 0..rounds {
        let mut w = p_perp.project(&zr)?;
        let mut ws = Vec::new();
        if keep {
            ws.push(w.clone());
        }
        for _ in 0..iters {
            let y = p_u.project(&w)?;
            for (wi, yi) in w.iter_mut().zip(y.iter()) {
                *wi -= yi;
            }
            if keep {
                ws.push(w.clone());
            }
        }
        if keep {
            trace.push(RoundTrace { z: zr.clone(), w: ws });
        }
        for (zi, wi) in zr.iter_mut().zip(w.iter()) {
            *zi -= wi;
        }
    }
    Ok(AmplifyTrace { rounds: trace, output: zr, scale })
}
