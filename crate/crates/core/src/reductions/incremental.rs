use crate::baselines::KalmanState;
use crate::matcore::{eig_sym, norm, Cholesky, DenseMatrix, DenseVector, LinalgError};

use super::{check_dim, check_queries, ReductionError, EIGEN_TOL};

/// Insertion-only regression solver used by [`incremental_omv_recover`].
pub trait IncrementalSolver {
    /// Appends row `a` with label `beta` and returns the new solution.
    fn insert_row(&mut self, a: &[f64], beta: f64) -> Result<DenseVector, ReductionError>;
    fn current(&self) -> DenseVector;
}

impl IncrementalSolver for KalmanState {
    fn insert_row(&mut self, a: &[f64], beta: f64) -> Result<DenseVector, ReductionError> {
        Ok(self.insert(a, beta)?)
    }

    fn current(&self) -> DenseVector {
        self.solution().clone()
    }
}

/// Initial rows `A` with `AᵀA = H⁻¹` (`A = Lᵀ` for the Cholesky factor
/// `LLᵀ = H⁻¹`) and zero labels. `H` must have spectrum in `[1, 3]`.
pub fn incremental_instance(h: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>), ReductionError> {
    let d = h.rows();
    check_dim(d)?;
    let eig = eig_sym(h)?;
    for (index, &value) in eig.values.iter().enumerate() {
        if !(1.0 - EIGEN_TOL..=3.0 + EIGEN_TOL).contains(&value) {
            return Err(ReductionError::EigenvalueOutOfRange { index, value, lo: 1.0, hi: 3.0 });
        }
    }
    let mut hinv = DenseMatrix::zeros(d, d);
    for (k, &lam) in eig.values.iter().enumerate() {
        hinv.sym_rank1_update(1.0 / lam, &eig.vectors.column(k));
    }
    let chol = Cholesky::new(&hinv)?;
    // RᵀR = H⁻¹, so the rows of R are the rows of A
    Ok((chol.upper().clone(), vec![0.0; d]))
}

/// Answers `H z⁽ᵗ⁾` for each query by inserting `(z⁽ᵗ⁾/(d²√T), 1)` and
/// reading `d²√T (x⁽ᵗ⁾ − x⁽ᵗ⁻¹⁾)` off the solver. `build` receives the
/// initial rows and labels from [`incremental_instance`].
pub fn incremental_omv_recover<S, F>(
    h: &DenseMatrix,
    queries: &[DenseVector],
    build: F,
) -> Result<Vec<DenseVector>, ReductionError>
where
    S: IncrementalSolver,
    F: FnOnce(&DenseMatrix, &[f64]) -> Result<S, ReductionError>,
{
    let d = h.rows();
    let t = queries.len();
    check_queries(t)?;
    let (a, b) = incremental_instance(h)?;
    let mut solver = build(&a, &b)?;
    let scale = (d * d) as f64 * (t.max(1) as f64).sqrt();
    let mut prev = solver.current();
    let mut out = Vec::with_capacity(t);
    for z in queries {
        if z.len() != d {
            return Err(LinalgError::DimensionMismatch { expected: d, found: z.len() }.into());
        }
        if norm(z) > 1.0 + 1e-12 {
            return Err(ReductionError::InvalidParameter("query norm exceeds 1".into()));
        }
        let row: Vec<f64> = z.iter().map(|v| v / scale).collect();
        let x = solver.insert_row(&row, 1.0)?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(ReductionError::SolverFailure("non-finite solution".into()));
        }
        out.push(x.iter().zip(prev.iter()).map(|(a, b)| scale * (a - b)).collect());
        prev = x;
    }
    Ok(out)
}

/// Builds a [`KalmanState`] for [`incremental_omv_recover`].
pub fn kalman_solver(a: &DenseMatrix, b: &[f64]) -> Result<KalmanState, ReductionError> {
    Ok(KalmanState::new(a, b)?)
}
