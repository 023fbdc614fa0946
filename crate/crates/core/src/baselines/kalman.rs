use crate::matcore::{dot, spd_inverse, DenseMatrix, DenseVector, LinalgError};

use super::BaselineError;

/// Downdates with `1 - aᵀHa` at or below this are refused.
pub const DOWNDATE_FLOOR: f64 = 1e-10;

/// Exact recursive least squares. Keeps `H = (AᵀA)⁻¹` and `u = Aᵀb` and
/// updates both by Sherman-Morrison on every insertion or deletion.
#[derive(Clone, Debug)]
pub struct KalmanState {
    d: usize,
    h: DenseMatrix,
    u: DenseVector,
    x: DenseVector,
    rows: DenseMatrix,
    labels: Vec<f64>,
}

impl KalmanState {
    /// Starts from rows `a0` with labels `b0`; `a0ᵀa0` must be invertible.
    pub fn new(a0: &DenseMatrix, b0: &[f64]) -> Result<Self, BaselineError> {
        if a0.rows() != b0.len() {
            return Err(LinalgError::DimensionMismatch { expected: a0.rows(), found: b0.len() }.into());
        }
        let h = spd_inverse(&a0.gram())?;
        let u = a0.tr_matvec(b0)?;
        let x = h.matvec(&u)?;
        Ok(Self { d: a0.cols(), h, u, x, rows: a0.clone(), labels: b0.to_vec() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn u(&self) -> &DenseVector {
        &self.u
    }

    pub fn solution(&self) -> &DenseVector {
        &self.x
    }

    /// Rows currently in the system, in insertion order.
    pub fn rows(&self) -> &DenseMatrix {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn insert(&mut self, a: &[f64], beta: f64) -> Result<DenseVector, BaselineError> {
        if a.len() != self.d {
            return Err(LinalgError::DimensionMismatch { expected: self.d, found: a.len() }.into());
        }
        let ha = self.h.matvec(a)?;
        let c = dot(a, &ha);
        self.h.sym_rank1_update(-1.0 / (1.0 + c), &ha);
        for (ui, ai) in self.u.iter_mut().zip(a) {
            *ui += beta * ai;
        }
        self.rows.push_row(a)?;
        self.labels.push(beta);
        self.h.matvec_into(&self.u, &mut self.x);
        Ok(self.x.clone())
    }

    /// Removes row `index` (positions shift down afterwards).
    pub fn delete(&mut self, index: usize) -> Result<DenseVector, BaselineError> {
        if index >= self.labels.len() {
            return Err(BaselineError::IndexOutOfRange { index, len: self.labels.len() });
        }
        let a = self.rows.row(index).to_vec();
        let beta = self.labels[index];
        let ha = self.h.matvec(&a)?;
        let denom = 1.0 - dot(&a, &ha);
        if denom <= DOWNDATE_FLOOR {
            return Err(BaselineError::SingularAfterDelete { index });
        }
        self.h.sym_rank1_update(1.0 / denom, &ha);
        for (ui, ai) in self.u.iter_mut().zip(&a) {
            *ui -= beta * ai;
        }
        self.rows.remove_row(index);
        self.labels.remove(index);
        self.h.matvec_into(&self.u, &mut self.x);
        Ok(self.x.clone())
    }
}

pub fn kalman_insert(state: &mut KalmanState, a: &[f64], beta: f64) -> Result<DenseVector, BaselineError> {
    state.insert(a, beta)
}

pub fn kalman_delete(state: &mut KalmanState, row_index: usize) -> Result<DenseVector, BaselineError> {
    state.delete(row_index)
}
