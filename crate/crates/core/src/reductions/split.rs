use rand::Rng;

use crate::matcore::{eig_sym, norm, random_orthonormal, DenseMatrix, DenseVector};

use super::oracle::{ExactProjection, MvOracle, NoisyProjection, ProjectionOracle};
use super::{check_dim, ReductionError, EIGEN_TOL};

/// Binary expansion of a symmetric matrix with spectrum in `[1/3, 1]`:
/// `H ≈ Σ_j 2⁻ʲ U(j)U(j)ᵀ` where `U(j)` holds the eigenvectors whose
/// eigenvalue has bit `j` set.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    vectors: DenseMatrix,
    values: DenseVector,
    sets: Vec<Vec<usize>>,
}

/// Number of bits kept for dimension `d`: `ceil(2 log₂ d) + 2`.
pub fn split_bits(d: usize) -> usize {
    (2.0 * (d as f64).log2()).ceil() as usize + 2
}

impl SpectralSplit {
    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    /// Eigenvector indices in `S_j`, `j = 1..=k`.
    pub fn set(&self, j: usize) -> &[usize] {
        &self.sets[j - 1]
    }

    pub fn eigenvalues(&self) -> &DenseVector {
        &self.values
    }

    /// `U(j)`, `d x |S_j|`.
    pub fn basis(&self, j: usize) -> DenseMatrix {
        self.vectors.select_columns(self.set(j))
    }

    /// `2⁻ᵏ`, the bound on `‖H − Σ_j 2⁻ʲ U(j)U(j)ᵀ‖₂`.
    pub fn truncation_bound(&self) -> f64 {
        0.5f64.powi(self.k() as i32)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let d = self.dim();
        let mut out = DenseMatrix::zeros(d, d);
        for j in 1..=self.k() {
            let w = 0.5f64.powi(j as i32);
            for &i in self.set(j) {
                out.sym_rank1_update(w, &self.vectors.column(i));
            }
        }
        out
    }

    pub fn exact_oracles(&self) -> Result<Vec<Box<dyn ProjectionOracle>>, ReductionError> {
        (1..=self.k())
            .map(|j| Ok(Box::new(ExactProjection::new(self.basis(j))?) as Box<dyn ProjectionOracle>))
            .collect()
    }

    /// One [`NoisyProjection`] per bit, seeded `seed + j`.
    pub fn noisy_oracles(
        &self,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<Vec<Box<dyn ProjectionOracle>>, ReductionError> {
        (1..=self.k())
            .map(|j| {
                let o = NoisyProjection::new(self.basis(j), alpha, beta, seed.wrapping_add(j as u64))?;
                Ok(Box::new(o) as Box<dyn ProjectionOracle>)
            })
            .collect()
    }
}

pub fn split_spectrum(h: &DenseMatrix) -> Result<SpectralSplit, ReductionError> {
    let d = h.rows();
    check_dim(d)?;
    let eig = eig_sym(h)?;
    let (lo, hi) = (1.0 / 3.0, 1.0);
    for (index, &value) in eig.values.iter().enumerate() {
        if value < lo - EIGEN_TOL || value > hi + EIGEN_TOL {
            return Err(ReductionError::EigenvalueOutOfRange { index, value, lo, hi });
        }
    }
    let k = split_bits(d);
    let top = (1u64 << k) - 1;
    let mut sets = vec![Vec::new(); k];
    for (i, &lam) in eig.values.iter().enumerate() {
        // λ = 1 has no finite expansion 0.b₁b₂…; it takes all k bits
        let m = ((lam.clamp(0.0, 1.0) * (1u64 << k) as f64).floor() as u64).min(top);
        for (j, set) in sets.iter_mut().enumerate() {
            if (m >> (k - 1 - j)) & 1 == 1 {
                set.push(i);
            }
        }
    }
    Ok(SpectralSplit { vectors: eig.vectors, values: eig.values, sets })
}

/// `y = Σ_j 2⁻ʲ · oracle_j(z)`, one projection query per bit.
pub fn omv_via_projection(
    split: &SpectralSplit,
    z: &[f64],
    oracles: &mut [Box<dyn ProjectionOracle>],
) -> Result<DenseVector, ReductionError> {
    if oracles.len() != split.k() {
        return Err(ReductionError::InvalidParameter(format!(
            "{} oracles for {} bits",
            oracles.len(),
            split.k()
        )));
    }
    if norm(z) > 1.0 + 1e-12 {
        return Err(ReductionError::InvalidParameter("query norm exceeds 1".into()));
    }
    let mut y = DenseVector::zeros(split.dim());
    for (j, o) in oracles.iter_mut().enumerate() {
        let w = 0.5f64.powi(j as i32 + 1);
        let p = o.project(z)?;
        for (yi, pi) in y.iter_mut().zip(p.iter()) {
            *yi += w * pi;
        }
    }
    Ok(y)
}

/// Matrix-vector oracle for `scale · H` built from a split of `H` and one
/// projection oracle per bit. Queries of any norm are rescaled to the unit
/// ball first.
pub struct SplitMv {
    split: SpectralSplit,
    oracles: Vec<Box<dyn ProjectionOracle>>,
    scale: f64,
}

impl SplitMv {
    pub fn new(split: SpectralSplit, oracles: Vec<Box<dyn ProjectionOracle>>, scale: f64) -> Self {
        Self { split, oracles, scale }
    }
}

impl MvOracle for SplitMv {
    fn dim(&self) -> usize {
        self.split.dim()
    }

    fn apply(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError> {
        let zn = norm(z);
        if zn == 0.0 {
            return Ok(DenseVector::zeros(z.len()));
        }
        let unit: Vec<f64> = z.iter().map(|v| v / zn).collect();
        let y = omv_via_projection(&self.split, &unit, &mut self.oracles)?;
        Ok(y.iter().map(|v| v * zn * self.scale).collect())
    }
}

/// `Q diag(λ) Qᵀ` with Haar `Q` and `λ_i` uniform on `[lo, hi]`.
pub fn random_symmetric_with_spectrum<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> DenseMatrix {
    let q = random_orthonormal(d, d, rng);
    let mut h = DenseMatrix::zeros(d, d);
    for j in 0..d {
        let lam = rng.random_range(lo..=hi);
        h.sym_rank1_update(lam, &q.column(j));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{eig_sym, sub};
    use crate::reductions::boolean_omv::{boolean_omv_gadget, omv_block_matrix, BoolMatrix};
    use crate::rng::{stream_rng, unit_vector};
    use proptest::prelude::*;
    use rand::Rng;

    fn spectral_norm(m: &DenseMatrix) -> f64 {
        let e = eig_sym(m).unwrap();
        e.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn bit_count() {
        assert_eq!(split_bits(1), 2);
        assert_eq!(split_bits(4), 6);
        assert_eq!(split_bits(5), 7);
        assert_eq!(split_bits(256), 18);
        for d in 1..300 {
            assert!(0.5f64.powi(split_bits(d) as i32) <= 1.0 / (d * d) as f64);
        }
    }

    #[test]
    fn half_identity_is_single_bit() {
        let mut h = DenseMatrix::identity(5);
        h.scale(0.5);
        let s = split_spectrum(&h).unwrap();
        assert_eq!(s.set(1), &[0, 1, 2, 3, 4]);
        for j in 2..=s.k() {
            assert!(s.set(j).is_empty());
        }
    }

    #[test]
    fn three_quarters_is_two_bits() {
        let mut h = DenseMatrix::identity(4);
        h.scale(0.75);
        let s = split_spectrum(&h).unwrap();
        assert_eq!(s.set(1).len(), 4);
        assert_eq!(s.set(2).len(), 4);
        assert!((3..=s.k()).all(|j| s.set(j).is_empty()));
        assert!(s.reconstruct().sub(&h).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn unit_eigenvalue_takes_all_bits() {
        let s = split_spectrum(&DenseMatrix::identity(3)).unwrap();
        assert!((1..=s.k()).all(|j| s.set(j).len() == 3));
        let err = spectral_norm(&s.reconstruct().sub(&DenseMatrix::identity(3)).unwrap());
        assert!(err <= s.truncation_bound() + 1e-15);
    }

    #[test]
    fn out_of_range_rejected() {
        let h = DenseMatrix::from_diagonal(&[0.5, 0.2]);
        assert!(matches!(split_spectrum(&h), Err(ReductionError::EigenvalueOutOfRange { .. })));
        let h = DenseMatrix::from_diagonal(&[1.5, 0.5]);
        assert!(matches!(split_spectrum(&h), Err(ReductionError::EigenvalueOutOfRange { .. })));
    }

    #[test]
    fn zero_query_gives_zero() {
        let mut rng = stream_rng(3, 9);
        let h = random_symmetric_with_spectrum(6, 1.0 / 3.0, 1.0, &mut rng);
        let s = split_spectrum(&h).unwrap();
        let mut o = s.noisy_oracles(0.0, 0.0, 1).unwrap();
        let y = omv_via_projection(&s, &[0.0; 6], &mut o).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_oracles_half_identity() {
        let mut h = DenseMatrix::identity(3);
        h.scale(0.5);
        let s = split_spectrum(&h).unwrap();
        let mut o = s.exact_oracles().unwrap();
        let z = [0.6, 0.0, -0.8];
        let y = omv_via_projection(&s, &z, &mut o).unwrap();
        assert!(norm(&sub(&y, &[0.3, 0.0, -0.4])) < 1e-15);
    }

    #[test]
    fn noisy_oracles_error_times_d2_is_bounded() {
        for &d in &[32usize, 64, 128] {
            let mut rng = stream_rng(d as u64, 9);
            let h = random_symmetric_with_spectrum(d, 1.0 / 3.0, 1.0, &mut rng);
            let s = split_spectrum(&h).unwrap();
            let beta = 0.5 / (d * d) as f64;
            let mut o = s.noisy_oracles(0.0, beta, 7).unwrap();
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let z = unit_vector(d, &mut rng);
                let y = omv_via_projection(&s, &z, &mut o).unwrap();
                worst = worst.max(norm(&sub(&y, &h.matvec(&z).unwrap())) * (d * d) as f64);
            }
            // 1/2 from the oracles plus at most 1/4 from truncation
            assert!(worst <= 0.75 + 1e-9, "d = {d}: {worst}");
        }
    }

    #[test]
    fn boolean_products_through_projection_oracles() {
        // Boolean OMv → block matrix/3 → spectral split → exact projections
        let d = 8;
        let mut rng = stream_rng(21, 9);
        for _ in 0..20 {
            let b = BoolMatrix::random(d, 0.5, &mut rng);
            let mut h = omv_block_matrix(&b);
            h.scale(1.0 / 3.0);
            let s = split_spectrum(&h).unwrap();
            let oracles = s.exact_oracles().unwrap();
            let mut mv = SplitMv::new(s, oracles, 3.0);
            let mut z: Vec<bool> = (0..d).map(|_| rng.random_bool(0.5)).collect();
            z[0] = true;
            assert_eq!(boolean_omv_gadget(&b, &z, &mut mv).unwrap(), b.mul_vec(&z));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn reconstruction_within_truncation(d in 1usize..24, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 9);
            let h = random_symmetric_with_spectrum(d, 1.0 / 3.0, 1.0, &mut rng);
            let s = split_spectrum(&h).unwrap();
            prop_assert_eq!(s.k(), split_bits(d));
            let err = spectral_norm(&s.reconstruct().sub(&h).unwrap());
            prop_assert!(err <= s.truncation_bound() + 1e-12);
            // membership matches the bits of each eigenvalue
            for (i, &lam) in s.eigenvalues().iter().enumerate() {
                let mut acc = 0.0;
                for j in 1..=s.k() {
                    if s.set(j).contains(&i) {
                        acc += 0.5f64.powi(j as i32);
                    }
                }
                prop_assert!(lam - acc >= -1e-12 && lam - acc <= s.truncation_bound());
            }
        }
    }
}
