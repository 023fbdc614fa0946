//! Johnson-Lindenstrauss sketches: dense random `k x n` matrices that keep
//! the norms of any fixed set of `m` vectors within `1 ± eps` with
//! probability `1 - delta`.

use rand::{Rng, RngCore};
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::matcore::{axpy, DenseMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    #[error("invalid sketch parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Entry distribution of a sketch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JlFamily {
    /// `±1/√k` with equal probability.
    Rademacher,
    /// `N(0, 1/k)`.
    Gaussian,
}

/// Row-count rule `k = min(ceil(c_jl · eps⁻² · ln(m/δ)), k_max)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JlConfig {
    pub c_jl: f64,
    /// `None` disables the cap.
    pub k_max: Option<usize>,
}

impl Default for JlConfig {
    fn default() -> Self {
        Self { c_jl: 8.0, k_max: Some(64) }
    }
}

impl JlConfig {
    pub fn uncapped() -> Self {
        Self { k_max: None, ..Self::default() }
    }

    pub fn with_cap(k_max: usize) -> Self {
        Self { k_max: Some(k_max), ..Self::default() }
    }

    /// Row count before the cap.
    pub fn formula_rows(&self, m: usize, eps_jl: f64, delta: f64) -> usize {
        let ln = (m.max(1) as f64 / delta).ln().max(0.0);
        ((self.c_jl * ln / (eps_jl * eps_jl)).ceil() as usize).max(1)
    }

    pub fn rows(&self, m: usize, eps_jl: f64, delta: f64) -> usize {
        let k = self.formula_rows(m, eps_jl, delta);
        match self.k_max {
            Some(cap) => k.min(cap.max(1)),
            None => k,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JlSketch {
    pub k: usize,
    pub n: usize,
    pub entries: DenseMatrix,
    pub seed: u64,
    pub family: JlFamily,
    pub eps_jl: f64,
    pub m: usize,
    pub delta: f64,
}

fn check_params(n: usize, eps_jl: f64, delta: f64) -> Result<(), SketchError> {
    if n == 0 {
        return Err(SketchError::InvalidParameter("input dimension must be at least 1".into()));
    }
    if !(eps_jl > 0.0 && eps_jl < 1.0) {
        return Err(SketchError::InvalidParameter(format!("eps_jl = {eps_jl} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SketchError::InvalidParameter(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Draws a Rademacher sketch for `n`-dimensional inputs. The sketch seed is
/// taken from `rng`, and [`JlSketch::regenerate`] rebuilds it from that seed.
pub fn jl_generate<R: RngCore + ?Sized>(
    n: usize,
    m: usize,
    eps_jl: f64,
    delta: f64,
    cfg: &JlConfig,
    rng: &mut R,
) -> Result<JlSketch, SketchError> {
    generate(JlFamily::Rademacher, n, m, eps_jl, delta, cfg, rng)
}

/// Same as [`jl_generate`] with Gaussian entries.
pub fn jl_generate_gaussian<R: RngCore + ?Sized>(
    n: usize,
    m: usize,
    eps_jl: f64,
    delta: f64,
    cfg: &JlConfig,
    rng: &mut R,
) -> Result<JlSketch, SketchError> {
    generate(JlFamily::Gaussian, n, m, eps_jl, delta, cfg, rng)
}

fn generate<R: RngCore + ?Sized>(
    family: JlFamily,
    n: usize,
    m: usize,
    eps_jl: f64,
    delta: f64,
    cfg: &JlConfig,
    rng: &mut R,
) -> Result<JlSketch, SketchError> {
    check_params(n, eps_jl, delta)?;
    let k = cfg.rows(m, eps_jl, delta);
    let seed = rng.next_u64();
    Ok(JlSketch { k, n, entries: fill(family, k, n, seed), seed, family, eps_jl, m, delta })
}

/// Entries come from a xoshiro256++ generator seeded with the sketch seed.
/// A fresh sketch is drawn for every kept row, so generation speed matters.
fn fill(family: JlFamily, k: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let scale = 1.0 / (k as f64).sqrt();
    let mut data = Vec::with_capacity(k * n);
    match family {
        JlFamily::Rademacher => {
            let mut bits = 0u64;
            for i in 0..k * n {
                if i % 64 == 0 {
                    bits = rng.next_u64();
                }
                data.push(if bits & 1 == 1 { scale } else { -scale });
                bits >>= 1;
            }
        }
        JlFamily::Gaussian => {
            for _ in 0..k * n {
                data.push(scale * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    DenseMatrix::from_row_major(k, n, data).expect("sketch shape")
}

impl JlSketch {
    /// Rebuilds a sketch from its recorded seed and shape.
    pub fn regenerate(family: JlFamily, k: usize, n: usize, seed: u64, eps_jl: f64, m: usize, delta: f64) -> Self {
        JlSketch { k, n, entries: fill(family, k, n, seed), seed, family, eps_jl, m, delta }
    }

    pub fn apply_vector(&self, v: &[f64]) -> Result<Vec<f64>, SketchError> {
        Ok(self.entries.matvec(v)?.into_vec())
    }
}

/// `J · B`.
pub fn jl_apply(j: &JlSketch, b: &DenseMatrix) -> Result<DenseMatrix, SketchError> {
    if b.rows() != j.n {
        return Err(LinalgError::DimensionMismatch { expected: j.n, found: b.rows() }.into());
    }
    let mut out = DenseMatrix::zeros(j.k, b.cols());
    for i in 0..j.k {
        let jrow = j.entries.row(i);
        let orow = out.row_mut(i);
        for (r, &w) in jrow.iter().enumerate() {
            let brow = b.row(r);
            if brow.iter().any(|&v| v != 0.0) {
                axpy(w, brow, orow);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::norm;
    use crate::rng::{stream_rng, unit_vector};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_sketch() {
        let cfg = JlConfig::default();
        let a = jl_generate(30, 100, 0.5, 0.1, &cfg, &mut stream_rng(9, 0)).unwrap();
        let b = jl_generate(30, 100, 0.5, 0.1, &cfg, &mut stream_rng(9, 0)).unwrap();
        assert_eq!(a, b);
        let again = JlSketch::regenerate(a.family, a.k, a.n, a.seed, a.eps_jl, a.m, a.delta);
        assert_eq!(again.entries, a.entries);
    }

    #[test]
    fn single_column_entries() {
        let j = jl_generate(1, 10, 0.3, 0.2, &JlConfig::default(), &mut stream_rng(1, 0)).unwrap();
        assert_eq!(j.entries.cols(), 1);
        let s = 1.0 / (j.k as f64).sqrt();
        assert!(j.entries.as_slice().iter().all(|&v| v == s || v == -s));
    }

    #[test]
    fn row_formula_matches_hand_computation() {
        // eps = 0.01, m = T^2, delta' = delta / (2 T^2) with T = 100, delta = 0.1
        let t = 100usize;
        let m = t * t;
        let dprime = 0.1 / (2.0 * (t * t) as f64);
        let ln = ((m as f64) / dprime).ln();
        let want = (8.0 * ln / 1e-4).ceil() as usize;
        let cfg = JlConfig::default();
        assert_eq!(cfg.formula_rows(m, 0.01, dprime), want);
        assert_eq!(want, 1_713_314);
        assert_eq!(cfg.rows(m, 0.01, dprime), 64);
        assert_eq!(JlConfig::uncapped().rows(m, 0.01, dprime), want);
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = JlConfig::default();
        let mut rng = stream_rng(0, 0);
        assert!(jl_generate(0, 10, 0.1, 0.1, &cfg, &mut rng).is_err());
        assert!(jl_generate(5, 10, 1.0, 0.1, &cfg, &mut rng).is_err());
        assert!(jl_generate(5, 10, 0.1, 0.0, &cfg, &mut rng).is_err());
    }

    #[test]
    fn apply_zero_and_unit() {
        let j = jl_generate(4, 10, 0.5, 0.1, &JlConfig::default(), &mut stream_rng(3, 0)).unwrap();
        let zero = jl_apply(&j, &DenseMatrix::zeros(4, 3)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let e1 = DenseMatrix::from_fn(4, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let col = jl_apply(&j, &e1).unwrap();
        assert_eq!(col.column(0), j.entries.column(0));
        assert!(jl_apply(&j, &DenseMatrix::zeros(5, 1)).is_err());
    }

    #[test]
    fn apply_matches_triple_loop() {
        let mut rng = stream_rng(11, 0);
        let j = jl_generate(12, 50, 0.4, 0.1, &JlConfig::default(), &mut rng).unwrap();
        let b = DenseMatrix::from_fn(12, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let got = jl_apply(&j, &b).unwrap();
        for i in 0..j.k {
            for c in 0..5 {
                let mut s = 0.0;
                for r in 0..12 {
                    s += j.entries[(i, r)] * b[(r, c)];
                }
                assert!((got[(i, c)] - s).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn norm_preservation_at_configured_confidence() {
        let n = 40;
        let trials = 10_000;
        let mut rng = stream_rng(2024, 0);
        let j = jl_generate(n, trials, 0.1, 0.01, &JlConfig::uncapped(), &mut rng).unwrap();
        assert_eq!(j.k, JlConfig::uncapped().formula_rows(trials, 0.1, 0.01));
        let mut ok = 0;
        for _ in 0..trials {
            let v = unit_vector(n, &mut rng);
            let r = norm(&j.apply_vector(&v).unwrap());
            if (r - 1.0).abs() < 0.1 {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.99 * trials as f64, "{ok} of {trials}");
    }

    proptest! {
        #[test]
        fn linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = stream_rng(seed, 0);
            let j = jl_generate(9, 20, 0.5, 0.1, &JlConfig::default(), &mut rng).unwrap();
            let v: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
            let w: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
            let mix: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
            let lhs = j.apply_vector(&mix).unwrap();
            let jv = j.apply_vector(&v).unwrap();
            let jw = j.apply_vector(&w).unwrap();
            for i in 0..j.k {
                prop_assert!((lhs[i] - (a * jv[i] + b * jw[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn gaussian_family_has_requested_shape(n in 1usize..30, seed in any::<u64>()) {
            let j = jl_generate_gaussian(n, 50, 0.5, 0.1, &JlConfig::with_cap(20), &mut stream_rng(seed, 0)).unwrap();
            prop_assert_eq!(j.k, 20);
            prop_assert_eq!(j.entries.cols(), n);
        }
    }
}
