use rand::Rng;

use crate::matcore::{dot, spd_inverse, DenseMatrix, DenseVector, LinalgError};
use crate::rng::{stream_rng, StreamRng};

use super::BaselineError;

/// Which Gram matrix the exact leverage is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeverageReference {
    /// The reweighted kept rows, as the sketched structure estimates it.
    KeptSet,
    /// Every row seen so far with weight one.
    FullStream,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplerPolicy {
    /// Keep every row with the same probability `p`.
    Uniform { p: f64 },
    /// Keep a row with probability `min(τ/(2ε²), 1)` (`min(τ, 1)` at `ε = 1`)
    /// where `τ` is its exact leverage.
    ExactLeverage { epsilon: f64, reference: LeverageReference },
}

impl SamplerPolicy {
    fn validate(&self) -> Result<(), BaselineError> {
        match *self {
            SamplerPolicy::Uniform { p } if !(p > 0.0 && p <= 1.0) => {
                Err(BaselineError::InvalidParameter(format!("p = {p} outside (0, 1]")))
            }
            SamplerPolicy::ExactLeverage { epsilon, .. } if !(epsilon > 0.0 && epsilon <= 1.0) => {
                Err(BaselineError::InvalidParameter(format!("epsilon = {epsilon} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Keep probability of the leverage rule shared with the benchmark setting of `ε`.
pub fn leverage_probability(tau: f64, epsilon: f64) -> f64 {
    let p = if epsilon >= 1.0 { tau } else { tau / (2.0 * epsilon * epsilon) };
    if p.is_nan() {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Row-sampling baseline. Kept rows are reweighted by `1/√p` and the
/// weighted normal equations are maintained by Sherman-Morrison.
#[derive(Clone, Debug)]
pub struct RowSamplerState {
    policy: SamplerPolicy,
    d: usize,
    g: DenseMatrix,
    u: DenseVector,
    x: DenseVector,
    /// Inverse Gram over `[a; β]` rows, only for the leverage policy.
    h: Option<DenseMatrix>,
    weights: Vec<f64>,
    kept: usize,
    rng: StreamRng,
    last_tau: Option<f64>,
}

impl RowSamplerState {
    /// Starts from rows `a0` with labels `b0`; all initial rows are kept with weight one.
    pub fn new(a0: &DenseMatrix, b0: &[f64], policy: SamplerPolicy, seed: u64) -> Result<Self, BaselineError> {
        policy.validate()?;
        if a0.rows() != b0.len() {
            return Err(LinalgError::DimensionMismatch { expected: a0.rows(), found: b0.len() }.into());
        }
        let d = a0.cols();
        let g = spd_inverse(&a0.gram())?;
        let u = a0.tr_matvec(b0)?;
        let x = g.matvec(&u)?;
        let h = match policy {
            SamplerPolicy::Uniform { .. } => None,
            SamplerPolicy::ExactLeverage { .. } => {
                let m0 = DenseMatrix::from_fn(a0.rows(), d + 1, |i, j| if j < d { a0[(i, j)] } else { b0[i] });
                Some(spd_inverse(&m0.gram())?)
            }
        };
        Ok(Self {
            policy,
            d,
            g,
            u,
            x,
            h,
            weights: vec![1.0; a0.rows()],
            kept: a0.rows(),
            rng: stream_rng(seed, 2),
            last_tau: None,
        })
    }

    pub fn policy(&self) -> SamplerPolicy {
        self.policy
    }

    pub fn solution(&self) -> &DenseVector {
        &self.x
    }

    /// Rows with non-zero weight, initial rows included.
    pub fn kept(&self) -> usize {
        self.kept
    }

    /// One weight per row seen: `1/√p` if kept, `0` otherwise.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact leverage computed for the most recent insertion.
    pub fn last_tau(&self) -> Option<f64> {
        self.last_tau
    }

    pub fn insert(&mut self, a: &[f64], beta: f64) -> Result<DenseVector, BaselineError> {
        if a.len() != self.d {
            return Err(LinalgError::DimensionMismatch { expected: self.d, found: a.len() }.into());
        }
        let mut m = a.to_vec();
        m.push(beta);
        let p = match self.policy {
            SamplerPolicy::Uniform { p } => p,
            SamplerPolicy::ExactLeverage { epsilon, reference } => {
                let h = self.h.as_mut().expect("leverage policy keeps H");
                let hm = h.matvec(&m)?;
                let tau = dot(&m, &hm);
                self.last_tau = Some(tau);
                if reference == LeverageReference::FullStream {
                    h.sym_rank1_update(-1.0 / (1.0 + tau), &hm);
                }
                leverage_probability(tau, epsilon)
            }
        };
        let draw: f64 = self.rng.random();
        if p > 0.0 && draw < p {
            if let SamplerPolicy::ExactLeverage { reference: LeverageReference::KeptSet, .. } = self.policy {
                let h = self.h.as_mut().expect("leverage policy keeps H");
                let hm = h.matvec(&m)?;
                let q = dot(&m, &hm);
                h.sym_rank1_update(-1.0 / (p + q), &hm);
            }
            let ga = self.g.matvec(a)?;
            let c = dot(a, &ga);
            self.g.sym_rank1_update(-1.0 / (p + c), &ga);
            for (ui, ai) in self.u.iter_mut().zip(a) {
                *ui += beta * ai / p;
            }
            self.g.matvec_into(&self.u, &mut self.x);
            self.weights.push(1.0 / p.sqrt());
            self.kept += 1;
        } else {
            self.weights.push(0.0);
        }
        Ok(self.x.clone())
    }
}

/// Inserts into a uniform sampler.
pub fn uniform_insert(state: &mut RowSamplerState, a: &[f64], beta: f64) -> Result<DenseVector, BaselineError> {
    debug_assert!(matches!(state.policy, SamplerPolicy::Uniform { .. }));
    state.insert(a, beta)
}

/// Inserts into an exact-leverage sampler.
pub fn exact_leverage_insert(state: &mut RowSamplerState, a: &[f64], beta: f64) -> Result<DenseVector, BaselineError> {
    debug_assert!(matches!(state.policy, SamplerPolicy::ExactLeverage { .. }));
    state.insert(a, beta)
}
