//! Helpers shared by the acceptance suite in `tests/acceptance.rs`.

use std::fmt;
use std::time::{Duration, Instant};

use dlsr::matcore::{dot, normal_equation_solve, DenseMatrix};

/// Result of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: String,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>3} {:<28} {:>7.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Runs `check`, which returns `(passed, detail)`, and fails it when it
/// takes longer than `limit`.
pub fn criterion(id: &str, name: &'static str, limit: Option<Duration>, check: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (mut passed, mut detail) = check();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; over the {:.0}s limit", limit.as_secs_f64()));
        }
    }
    Outcome { id: id.to_string(), name, passed, detail, elapsed }
}

pub fn residual_norm(a: &DenseMatrix, b: &[f64], x: &[f64]) -> f64 {
    (0..a.rows()).map(|i| (dot(a.row(i), x) - b[i]).powi(2)).sum::<f64>().sqrt()
}

/// Residual of the exact least-squares solution.
pub fn optimal_residual(a: &DenseMatrix, b: &[f64]) -> f64 {
    let x = normal_equation_solve(a, b).expect("full column rank");
    residual_norm(a, b, &x)
}

/// `[A | b]`.
pub fn stack(a: &DenseMatrix, b: &[f64]) -> DenseMatrix {
    let d = a.cols();
    DenseMatrix::from_fn(a.rows(), d + 1, |i, j| if j < d { a[(i, j)] } else { b[i] })
}

/// `Σ w_i² m_i m_iᵀ` over the rows of `m`.
pub fn weighted_gram(m: &DenseMatrix, weights: &[f64]) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(m.cols(), m.cols());
    for (i, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            g.sym_rank1_update(w * w, m.row(i));
        }
    }
    g
}

/// Middle element (upper middle for even lengths).
pub fn median_usize(values: &[usize]) -> usize {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[v.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_gram_matches_scaled_rows() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let w = [2.0, 0.0, 1.0];
        let scaled = DenseMatrix::from_rows(&[vec![2.0, 4.0], vec![0.5, 0.5]]).unwrap();
        let g = weighted_gram(&m, &w);
        let want = scaled.gram();
        assert!(g.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn timed_out_criterion_fails() {
        let o = criterion("x", "slow", Some(Duration::ZERO), || {
            std::thread::sleep(Duration::from_millis(2));
            (true, "ok".into())
        });
        assert!(!o.passed);
        assert!(o.to_string().starts_with("FAIL"));
    }

    #[test]
    fn optimal_residual_of_consistent_system_is_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(optimal_residual(&a, &[1.0, 2.0, 3.0]) < 1e-12);
        assert_eq!(median_usize(&[5, 1, 3, 4]), 4);
    }
}
