use super::dense::{dot, DenseMatrix, DenseVector};
use super::LinalgError;

/// Gram matrices whose reciprocal condition estimate falls below this are
/// reported as singular by [`normal_equation_solve`].
pub const CONDITION_FLOOR: f64 = 1e-14;

/// Relative jitter added to the diagonal when a strict factorization fails.
pub const JITTER_SCALE: f64 = 1e-12;

/// Cholesky factor `R` (upper triangular, `R^T R = A`), stored row-major so
/// that both triangular solves and rank-1 updates walk contiguous rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    r: DenseMatrix,
    jitter: f64,
}

impl Cholesky {
    /// Strict factorization. Fails on the first non-positive pivot.
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch { expected: a.rows(), found: a.cols() });
        }
        if !a.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        factor_upper(a, 0.0).map(|r| Self { r, jitter: 0.0 })
    }

    /// Strict factorization, falling back to `A + j I` with
    /// `j = 1e-12 * trace(A) / n` when a pivot is not positive.
    pub fn with_jitter(a: &DenseMatrix) -> Result<Self, LinalgError> {
        match Self::new(a) {
            Ok(c) => Ok(c),
            Err(LinalgError::NotPositiveDefinite { .. }) => {
                let n = a.rows().max(1) as f64;
                let j = JITTER_SCALE * (a.trace() / n).abs().max(f64::MIN_POSITIVE);
                factor_upper(a, j).map(|r| Self { r, jitter: j })
            }
            Err(e) => Err(e),
        }
    }

    /// Wraps an existing upper-triangular factor.
    pub fn from_upper(r: DenseMatrix) -> Result<Self, LinalgError> {
        if !r.is_square() {
            return Err(LinalgError::DimensionMismatch { expected: r.rows(), found: r.cols() });
        }
        Ok(Self { r, jitter: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    pub fn upper(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn lower(&self) -> DenseMatrix {
        self.r.transpose()
    }

    /// Diagonal shift applied to obtain the factor, zero for a strict factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `(min R_ii / max R_ii)^2`, a cheap lower estimate of `1 / cond(A)`.
    pub fn rcond(&self) -> f64 {
        let d = self.r.diagonal();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        if hi == 0.0 {
            0.0
        } else {
            (lo / hi).powi(2)
        }
    }

    /// Solves `R^T y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.r.row(i);
            let yi = b[i] / row[i];
            b[i] = yi;
            if yi != 0.0 {
                for (bj, rj) in b[i + 1..n].iter_mut().zip(&row[i + 1..n]) {
                    *bj -= rj * yi;
                }
            }
        }
    }

    /// Solves `R x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let row = self.r.row(i);
            let s = dot(&row[i + 1..], &y[i + 1..]);
            y[i] = (y[i] - s) / row[i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> DenseVector {
        let mut x = DenseVector::from(b);
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            inv.set_column(j, &col);
        }
        inv.symmetrize();
        inv
    }

    /// Replaces the factor of `A` with the factor of `A + v v^T`.
    pub fn rank1_update(&mut self, v: &[f64]) {
        let n = self.dim();
        assert_eq!(v.len(), n);
        let mut x = v.to_vec();
        for k in 0..n {
            let row = self.r.row_mut(k);
            let rkk = row[k];
            let r = rkk.hypot(x[k]);
            let c = r / rkk;
            let s = x[k] / rkk;
            let inv_c = rkk / r;
            row[k] = r;
            if s != 0.0 {
                for (rj, xj) in row[k + 1..].iter_mut().zip(&mut x[k + 1..]) {
                    let rkj = (*rj + s * *xj) * inv_c;
                    *xj = c * *xj - s * rkj;
                    *rj = rkj;
                }
            }
        }
    }
}

fn factor_upper(a: &DenseMatrix, shift: f64) -> Result<DenseMatrix, LinalgError> {
    let n = a.rows();
    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r[(i, j)] = a[(i, j)] + if i == j { shift } else { 0.0 };
        }
    }
    // right-looking: after step k the trailing block holds the Schur complement
    for k in 0..n {
        let pivot = r[(k, k)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: k });
        }
        let rkk = pivot.sqrt();
        let inv = 1.0 / rkk;
        {
            let row = r.row_mut(k);
            row[k] = rkk;
            for v in &mut row[k + 1..] {
                *v *= inv;
            }
        }
        let rk: Vec<f64> = r.row(k)[k + 1..].to_vec();
        for (off, &rki) in rk.iter().enumerate() {
            let i = k + 1 + off;
            if rki != 0.0 {
                let row = r.row_mut(i);
                for (dst, &rkj) in row[i..].iter_mut().zip(&rk[off..]) {
                    *dst -= rki * rkj;
                }
            }
        }
    }
    Ok(r)
}

/// Least-squares solution of `min ||A x - b||` via the normal equations.
pub fn normal_equation_solve(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector, LinalgError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch { expected: a.rows(), found: b.len() });
    }
    let gram = a.gram();
    let rhs = a.tr_matvec(b)?;
    solve_gram(&gram, &rhs)
}

/// Solves `K x = rhs` for a Gram matrix `K`, rejecting ill-conditioned systems.
pub fn solve_gram(gram: &DenseMatrix, rhs: &[f64]) -> Result<DenseVector, LinalgError> {
    let chol = match Cholesky::new(gram) {
        Ok(c) => c,
        Err(LinalgError::NotPositiveDefinite { .. }) => return Err(LinalgError::SingularGram),
        Err(e) => return Err(e),
    };
    if chol.rcond() < CONDITION_FLOOR {
        return Err(LinalgError::SingularGram);
    }
    Ok(chol.solve(rhs))
}

/// Inverse of an SPD matrix, with the same conditioning rule as [`solve_gram`].
pub fn spd_inverse(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let chol = match Cholesky::new(a) {
        Ok(c) => c,
        Err(LinalgError::NotPositiveDefinite { .. }) => return Err(LinalgError::SingularGram),
        Err(e) => return Err(e),
    };
    if chol.rcond() < CONDITION_FLOOR {
        return Err(LinalgError::SingularGram);
    }
    Ok(chol.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::dense::norm;
    use proptest::prelude::*;

    fn spd(n: usize, seed: u64) -> DenseMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DenseMatrix::from_fn(n + 3, n, |_, _| next());
        let mut g = a.gram();
        for i in 0..n {
            g[(i, i)] += 0.1;
        }
        g
    }

    #[test]
    fn two_by_two_by_hand() {
        // [[4, 2], [2, 3]] = R^T R with R = [[2, 1], [0, sqrt(2)]]
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let c = Cholesky::new(&a).unwrap();
        assert!((c.upper()[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((c.upper()[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((c.upper()[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        let x = c.solve(&[2.0, 1.0]);
        // inverse is [[3, -2], [-2, 4]] / 8
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert!(x[1].abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_and_jitters_semidefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::new(&a), Err(LinalgError::NotPositiveDefinite { .. })));
        let psd = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let c = Cholesky::with_jitter(&psd).unwrap();
        assert!(c.jitter() > 0.0);
    }

    #[test]
    fn normal_equations_small_case() {
        // rows (1,0), (0,1), (1,1) with labels 1, 2, 4
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let x = normal_equation_solve(&a, &[1.0, 2.0, 4.0]).unwrap();
        // A^T A = [[2,1],[1,2]], A^T b = [5, 6] -> x = [4/3, 7/3]
        assert!((x[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_gram_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(normal_equation_solve(&a, &[1.0, 1.0, 1.0]), Err(LinalgError::SingularGram));
        let tiny = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1e-9]]).unwrap();
        assert_eq!(normal_equation_solve(&tiny, &[1.0, 1.0]), Err(LinalgError::SingularGram));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = spd(7, 3);
        let inv = spd_inverse(&a).unwrap();
        let p = inv.matmul(&a).unwrap();
        assert!(p.sub(&DenseMatrix::identity(7)).unwrap().max_abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn factor_reconstructs(n in 1usize..12, seed in any::<u64>()) {
            let a = spd(n, seed);
            let c = Cholesky::new(&a).unwrap();
            let back = c.upper().tr_matmul(c.upper()).unwrap();
            prop_assert!(back.sub(&a).unwrap().max_abs() <= 1e-12 * a.max_abs().max(1.0));
        }

        #[test]
        fn rank1_update_matches_refactor(n in 1usize..10, seed in any::<u64>(), scale in 0.01f64..10.0) {
            let a = spd(n, seed);
            let v: Vec<f64> = (0..n).map(|i| scale * ((i as f64 + seed as f64 % 7.0).sin())).collect();
            let mut c = Cholesky::new(&a).unwrap();
            c.rank1_update(&v);
            let mut a2 = a.clone();
            a2.sym_rank1_update(1.0, &v);
            let fresh = Cholesky::new(&a2).unwrap();
            let diff = c.upper().sub(fresh.upper()).unwrap().max_abs();
            prop_assert!(diff <= 1e-9 * fresh.upper().max_abs().max(1.0));
        }

        #[test]
        fn solve_residual_is_small(n in 1usize..12, seed in any::<u64>()) {
            let a = spd(n, seed);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37 + 1.0).cos()).collect();
            let x = Cholesky::new(&a).unwrap().solve(&b);
            let r = crate::matcore::dense::sub(&a.matvec(&x).unwrap(), &b);
            prop_assert!(norm(&r) <= 1e-9 * norm(&b).max(1.0) * a.max_abs().max(1.0));
        }
    }
}
