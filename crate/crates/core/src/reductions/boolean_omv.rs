use rand::Rng;

use crate::matcore::{DenseMatrix, DenseVector};

use super::oracle::MvOracle;
use super::{check_dim, ReductionError};

/// Square Boolean matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl BoolMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                bits.push(f(i, j));
            }
        }
        Self { n, bits }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| i == j)
    }

    /// Each entry is 1 with probability `density`.
    pub fn random<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Self {
        Self::from_fn(n, |_, _| rng.random_bool(density))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    /// Product over the Boolean semiring (OR of ANDs).
    pub fn mul_vec(&self, z: &[bool]) -> Vec<bool> {
        (0..self.n).map(|i| (0..self.n).any(|j| self.get(i, j) && z[j])).collect()
    }
}

/// `[2I, B/d; Bᵀ/d, 2I]`, whose spectrum lies in `[1, 3]`.
pub fn omv_block_matrix(b: &BoolMatrix) -> DenseMatrix {
    let d = b.dim();
    let w = 1.0 / d as f64;
    DenseMatrix::from_fn(2 * d, 2 * d, |i, j| {
        if i == j {
            2.0
        } else if i < d && j >= d {
            if b.get(i, j - d) { w } else { 0.0 }
        } else if i >= d && j < d {
            if b.get(j, i - d) { w } else { 0.0 }
        } else {
            0.0
        }
    })
}

/// Recovers the Boolean product `B z` from one approximate real product with
/// [`omv_block_matrix`]`(B)`. The query is `(0, z/‖z‖)`; entry `i` is set when
/// `d‖z‖·ŷ_i ≥ 1/2`.
pub fn boolean_omv_gadget(
    b: &BoolMatrix,
    z: &[bool],
    oracle: &mut dyn MvOracle,
) -> Result<Vec<bool>, ReductionError> {
    let d = b.dim();
    check_dim(d)?;
    if z.len() != d || oracle.dim() != 2 * d {
        return Err(ReductionError::InvalidParameter(format!(
            "query length {} and oracle dimension {} do not match d = {d}",
            z.len(),
            oracle.dim()
        )));
    }
    let ones = z.iter().filter(|&&v| v).count();
    if ones == 0 {
        return Err(ReductionError::InvalidParameter("query must be nonzero".into()));
    }
    let zn = (ones as f64).sqrt();
    let mut query = DenseVector::zeros(2 * d);
    for (j, &v) in z.iter().enumerate() {
        if v {
            query[d + j] = 1.0 / zn;
        }
    }
    let y = oracle.apply(&query)?;
    let scale = d as f64 * zn;
    Ok(y[..d].iter().map(|&v| scale * v >= 0.5).collect())
}
