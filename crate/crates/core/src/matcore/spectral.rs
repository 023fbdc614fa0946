use rand::Rng;
use rand_distr::StandardNormal;

use super::dense::{DenseMatrix, DenseVector};
use super::factor::Cholesky;
use super::LinalgError;

/// Symmetry tolerance for [`eig_sym`], relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Tolerance on `U^T U = I` accepted by [`orthonormal_complement`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Absolute slack on the generalized eigenvalue bracket in
/// [`spectral_approx_check`], so that `G ≈_0 G` holds in floating point.
pub const SPECTRAL_SLACK: f64 = 1e-9;

/// Eigendecomposition `S = V diag(values) V^T`, eigenvalues descending and
/// eigenvectors stored as columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: DenseVector,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.vectors.rows();
        let mut out = DenseMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            out.sym_rank1_update(lam, &v);
        }
        out
    }
}

pub fn eig_sym(s: &DenseMatrix) -> Result<SymmetricEigen, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::DimensionMismatch { expected: s.rows(), found: s.cols() });
    }
    if !s.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL * s.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric { asymmetry: asym });
    }
    let mut sym = s.clone();
    sym.symmetrize();
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let n = s.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: DenseVector = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Smallest and largest eigenvalue of `L^{-1} G1 L^{-T}` where `G2 = L L^T`.
/// `G2` may be semidefinite, in which case it is jittered.
pub fn generalized_eigen_range(g1: &DenseMatrix, g2: &DenseMatrix) -> Result<(f64, f64), LinalgError> {
    if g1.rows() != g2.rows() || g1.cols() != g2.cols() {
        return Err(LinalgError::DimensionMismatch { expected: g2.rows(), found: g1.rows() });
    }
    let n = g1.rows();
    if n == 0 {
        return Ok((1.0, 1.0));
    }
    let chol = Cholesky::with_jitter(g2)?;
    // X = L^{-1} G1, then C = L^{-1} X^T; with L = R^T these are forward solves
    let mut x = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = g1.column(j);
        chol.solve_lower_in_place(&mut col);
        x.set_column(j, &col);
    }
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = x.row(j).to_vec();
        chol.solve_lower_in_place(&mut col);
        c.set_column(j, &col);
    }
    c.symmetrize();
    let eig = eig_sym(&c)?;
    Ok((eig.values[n - 1], eig.values[0]))
}

/// Whether `(1-eps) G2 ⪯ G1 ⪯ (1+eps) G2`.
pub fn spectral_approx_check(g1: &DenseMatrix, g2: &DenseMatrix, eps: f64) -> Result<bool, LinalgError> {
    let (lo, hi) = generalized_eigen_range(g1, g2)?;
    Ok(lo >= 1.0 - eps - SPECTRAL_SLACK && hi <= 1.0 + eps + SPECTRAL_SLACK)
}

/// Orthonormal basis `W` (d x (d-k)) of the complement of the column span of `U` (d x k).
pub fn orthonormal_complement(u: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let d = u.rows();
    let k = u.cols();
    if k > d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: k });
    }
    check_orthonormal(u)?;
    let mut p = DenseMatrix::identity(d);
    for j in 0..k {
        p.sym_rank1_update(-1.0, &u.column(j));
    }
    let eig = eig_sym(&p)?;
    let idx: Vec<usize> = (0..d - k).collect();
    Ok(eig.vectors.select_columns(&idx))
}

pub fn check_orthonormal(u: &DenseMatrix) -> Result<(), LinalgError> {
    let gram = u.gram();
    let dev = gram.sub(&DenseMatrix::identity(u.cols()))?.max_abs();
    if dev > ORTHONORMAL_TOL {
        return Err(LinalgError::NotOrthonormal { deviation: dev });
    }
    Ok(())
}

/// Haar-distributed `d x k` matrix with orthonormal columns.
pub fn random_orthonormal<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> DenseMatrix {
    assert!(k <= d);
    if k == 0 {
        return DenseMatrix::zeros(d, 0);
    }
    let g = nalgebra::DMatrix::<f64>::from_fn(d, k, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // sign fix so the distribution is Haar rather than QR-dependent
    DenseMatrix::from_fn(d, k, |i, j| if r[(j, j)] < 0.0 { -q[(i, j)] } else { q[(i, j)] })
}

/// Orthogonal projection `U U^T z`.
pub fn project(u: &DenseMatrix, z: &[f64]) -> DenseVector {
    let c = u.tr_matvec(z).expect("projection dims");
    u.matvec(&c).expect("projection dims")
}
