use crate::sketch::JlConfig;

use super::DynLsrError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Rows are fixed in advance.
    Oblivious,
    /// Rows may depend on previously published solutions.
    Adaptive,
}

/// How a leverage estimate `τ` becomes a keep probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingRule {
    /// `p = min(C·τ, 1)` with `C = C_obl` or `C_adv` depending on the mode.
    Theory,
    /// `p = min(τ/(2ε²), 1)`, or `min(τ, 1)` at `ε = 1`. The constant used in
    /// the benchmark experiments.
    Empirical,
    /// `p = 1` for every row. Reduces the structure to exact recursive least squares.
    KeepAll,
}

/// Representation of the sketched leverage matrix `B̃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SketchBackend {
    /// Stores `B = N·H` and a Rademacher `J` with one column per kept row.
    /// Every kept row costs `O(k·s·d)`.
    Explicit,
    /// Keeps a Cholesky factor `R` of `NᵀN` and draws `B̃ = Z·R⁻ᵀ` with a
    /// Gaussian `k x (d+1)` matrix `Z`. For Gaussian `J`, `J·N·H` and
    /// `Z·R⁻ᵀ` have the same distribution, and the cost per kept row no
    /// longer grows with `s`.
    Factored,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Maximum number of insertions.
    pub horizon: usize,
    pub mode: Mode,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub seed: u64,
    /// Rebuild `H`, `B`, `G`, `u` from `N` after this many kept rows.
    pub recompute_interval: Option<usize>,
    pub rule: SamplingRule,
    pub backend: SketchBackend,
    pub jl: JlConfig,
}

impl SamplerConfig {
    pub fn new(epsilon: f64, delta: f64, horizon: usize) -> Self {
        Self {
            epsilon,
            delta,
            horizon,
            mode: Mode::Oblivious,
            sigma_min: 1e-12,
            sigma_max: 1.0,
            seed: 0,
            recompute_interval: None,
            rule: SamplingRule::Theory,
            backend: SketchBackend::Factored,
            jl: JlConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), DynLsrError> {
        let bad = |msg: String| Err(DynLsrError::InvalidParameter(msg));
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon = {} outside (0, 1]", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if !(self.sigma_min > 0.0) || !(self.sigma_max >= self.sigma_min) {
            return bad(format!("need sigma_max >= sigma_min > 0, got {} and {}", self.sigma_max, self.sigma_min));
        }
        if self.recompute_interval == Some(0) {
            return bad("recompute_interval must be positive".into());
        }
        if !(self.jl.c_jl > 0.0) || self.jl.k_max == Some(0) {
            return bad("JL row rule must produce at least one row".into());
        }
        Ok(())
    }

    /// Whether `ε` and `δ` are both below 1/8, where the approximation
    /// guarantee is proved. Larger values are accepted and run the same code.
    pub fn within_proven_regime(&self) -> bool {
        self.epsilon < 0.125 && self.delta < 0.125
    }

    /// `C_obl = 10 ε⁻² ln(2T/δ)`.
    pub fn c_obl(&self) -> f64 {
        10.0 / (self.epsilon * self.epsilon) * (2.0 * self.horizon as f64 / self.delta).ln()
    }

    /// `C_adv = 32 (1+ε) d ln(σ_max/σ_min) C_obl`. The log factor is floored
    /// at 1 so that equal bounds do not switch sampling off.
    pub fn c_adv(&self, d: usize) -> f64 {
        let log_ratio = (self.sigma_max / self.sigma_min).ln().max(1.0);
        32.0 * (1.0 + self.epsilon) * d as f64 * log_ratio * self.c_obl()
    }

    /// Keep probability for an estimate `tau` on a `d`-feature problem.
    pub fn probability(&self, tau: f64, d: usize) -> f64 {
        let p = match self.rule {
            SamplingRule::KeepAll => return 1.0,
            SamplingRule::Theory => match self.mode {
                Mode::Oblivious => self.c_obl() * tau,
                Mode::Adaptive => self.c_adv(d) * tau,
            },
            SamplingRule::Empirical => {
                if self.epsilon >= 1.0 {
                    tau
                } else {
                    tau / (2.0 * self.epsilon * self.epsilon)
                }
            }
        };
        if p.is_nan() {
            0.0
        } else {
            p.clamp(0.0, 1.0)
        }
    }

    /// Confidence passed to every sketch refresh: `δ / (2T²)`.
    pub fn jl_delta(&self) -> f64 {
        let t = self.horizon as f64;
        self.delta / (2.0 * t * t)
    }
}

/// Sketch accuracy used on refresh.
pub const JL_EPS: f64 = 0.01;
