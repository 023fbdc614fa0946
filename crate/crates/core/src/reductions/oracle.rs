use crate::matcore::{check_orthonormal, norm, project, DenseMatrix, DenseVector, LinalgError};
use crate::rng::{stream_rng, unit_vector, StreamRng};

use super::ReductionError;

/// Answers `y ≈ U Uᵀ z` with `‖y − UUᵀz‖ ≤ α‖UUᵀz‖ + β‖z‖`.
pub trait ProjectionOracle {
    fn alpha(&self) -> f64;
    fn beta(&self) -> f64;
    fn dim(&self) -> usize;
    fn project(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError>;
}

/// Answers approximate products `H z` for a fixed real matrix.
pub trait MvOracle {
    fn dim(&self) -> usize;
    fn apply(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError>;
}

fn check_len(expected: usize, z: &[f64]) -> Result<(), ReductionError> {
    if z.len() != expected {
        return Err(LinalgError::DimensionMismatch { expected, found: z.len() }.into());
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ExactProjection {
    basis: DenseMatrix,
}

impl ExactProjection {
    /// `basis` is `d x k` with orthonormal columns; `k = 0` projects to zero.
    pub fn new(basis: DenseMatrix) -> Result<Self, ReductionError> {
        check_orthonormal(&basis)?;
        Ok(Self { basis })
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }
}

impl ProjectionOracle for ExactProjection {
    fn alpha(&self) -> f64 {
        0.0
    }

    fn beta(&self) -> f64 {
        0.0
    }

    fn dim(&self) -> usize {
        self.basis.rows()
    }

    fn project(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError> {
        check_len(self.basis.rows(), z)?;
        if self.basis.cols() == 0 {
            return Ok(DenseVector::zeros(z.len()));
        }
        Ok(project(&self.basis, z))
    }
}

/// Weight of `−UUᵀz/‖UUᵀz‖` in the noise direction; the rest is a fresh
/// random unit vector.
pub const NOISE_ALIGNMENT: f64 = 0.5;

/// Returns `(1−α)·UUᵀz + β‖z‖·g` with `g` a seeded unit vector that leans
/// against the true projection. The error is `‖−α·UUᵀz + β‖z‖g‖`, which
/// meets the (α, β) contract and sits close to its edge.
#[derive(Clone, Debug)]
pub struct NoisyProjection {
    basis: DenseMatrix,
    alpha: f64,
    beta: f64,
    rng: StreamRng,
}

impl NoisyProjection {
    pub fn new(basis: DenseMatrix, alpha: f64, beta: f64, seed: u64) -> Result<Self, ReductionError> {
        check_orthonormal(&basis)?;
        if !(0.0..1.0).contains(&alpha) || !(beta >= 0.0 && beta.is_finite()) {
            return Err(ReductionError::InvalidParameter(format!("alpha = {alpha}, beta = {beta}")));
        }
        Ok(Self { basis, alpha, beta, rng: stream_rng(seed, 5) })
    }
}

impl ProjectionOracle for NoisyProjection {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn dim(&self) -> usize {
        self.basis.rows()
    }

    fn project(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError> {
        let d = self.basis.rows();
        check_len(d, z)?;
        let pz = if self.basis.cols() == 0 { DenseVector::zeros(d) } else { project(&self.basis, z) };
        let r = unit_vector(d, &mut self.rng);
        let pn = norm(&pz);
        let mut g = r.clone();
        if pn > 0.0 {
            for (gi, pi) in g.iter_mut().zip(pz.iter()) {
                *gi = NOISE_ALIGNMENT * (-pi / pn) + (1.0 - NOISE_ALIGNMENT) * *gi;
            }
        }
        let gn = norm(&g);
        let g = if gn > 0.0 { g } else { r };
        let gn = norm(&g);
        let scale = self.beta * norm(z) / gn;
        Ok(pz.iter().zip(g.iter()).map(|(p, gi)| (1.0 - self.alpha) * p + scale * gi).collect())
    }
}

#[derive(Clone, Debug)]
pub struct ExactMv {
    h: DenseMatrix,
}

impl ExactMv {
    pub fn new(h: DenseMatrix) -> Self {
        Self { h }
    }
}

impl MvOracle for ExactMv {
    fn dim(&self) -> usize {
        self.h.rows()
    }

    fn apply(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError> {
        check_len(self.h.cols(), z)?;
        Ok(self.h.matvec(z)?)
    }
}

/// `H z` plus a seeded random error of norm exactly `noise`.
#[derive(Clone, Debug)]
pub struct NoisyMv {
    h: DenseMatrix,
    noise: f64,
    rng: StreamRng,
}

impl NoisyMv {
    pub fn new(h: DenseMatrix, noise: f64, seed: u64) -> Self {
        Self { h, noise, rng: stream_rng(seed, 6) }
    }
}

impl MvOracle for NoisyMv {
    fn dim(&self) -> usize {
        self.h.rows()
    }

    fn apply(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError> {
        check_len(self.h.cols(), z)?;
        let mut y = self.h.matvec(z)?;
        let g = unit_vector(y.len(), &mut self.rng);
        for (yi, gi) in y.iter_mut().zip(g.iter()) {
            *yi += self.noise * gi;
        }
        Ok(y)
    }
}

/// `‖y − UUᵀz‖` and the contract bound `α‖UUᵀz‖ + β‖z‖`.
#[cfg(test)]
pub(crate) fn projection_error(basis: &DenseMatrix, z: &[f64], y: &[f64], alpha: f64, beta: f64) -> (f64, f64) {
    let pz = if basis.cols() == 0 { DenseVector::zeros(z.len()) } else { project(basis, z) };
    let err: f64 = pz.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    (err, alpha * norm(&pz) + beta * norm(z))
}
