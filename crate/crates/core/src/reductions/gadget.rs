use rand::Rng;

use crate::baselines::KalmanState;
use crate::matcore::{dot, norm, orthonormal_complement, DenseMatrix, DenseVector, LinalgError};
use crate::rng::{gaussian_vector, stream_rng, StreamRng};

use super::oracle::ProjectionOracle;
use super::verify::GADGET_C_R;
use super::{check_dim, ReductionError};

/// Accuracy of the regression solver the gadget assumes (`√L ≤ (1+ε)√L*`).
pub const GADGET_EPSILON: f64 = 0.01;

/// Smallest regularization accepted; below this `λ` loses meaning in `f64`.
pub const MIN_LAMBDA: f64 = 1e-300;

/// Regression instance whose solutions answer projection queries onto `U`:
/// rows `[√λ·I; U_⊥ᵀ]` with labels `[0; 1/√d·1]`, and `x* = U_⊥·1/√d`.
#[derive(Clone, Debug)]
pub struct LsrGadgetState {
    u: DenseMatrix,
    u_perp: DenseMatrix,
    x_star: DenseVector,
    lambda: f64,
}

impl LsrGadgetState {
    /// `λ = d⁻⁴⁰`.
    pub fn new(u: DenseMatrix) -> Result<Self, ReductionError> {
        let lambda = (u.rows() as f64).powi(-40);
        Self::with_lambda(u, lambda)
    }

    pub fn with_lambda(u: DenseMatrix, lambda: f64) -> Result<Self, ReductionError> {
        let d = u.rows();
        check_dim(d)?;
        if !(lambda >= MIN_LAMBDA && lambda.is_finite()) {
            return Err(ReductionError::InvalidParameter(format!("lambda = {lambda:e} is below {MIN_LAMBDA:e}")));
        }
        let u_perp = orthonormal_complement(&u)?;
        let w = 1.0 / (d as f64).sqrt();
        let mut x_star = DenseVector::zeros(d);
        for j in 0..u_perp.cols() {
            for (xi, ui) in x_star.iter_mut().zip(u_perp.column(j).iter()) {
                *xi += w * ui;
            }
        }
        Ok(Self { u, u_perp, x_star, lambda })
    }

    pub fn d(&self) -> usize {
        self.u.rows()
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn u_perp(&self) -> &DenseMatrix {
        &self.u_perp
    }

    pub fn x_star(&self) -> &DenseVector {
        &self.x_star
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `200 d⁴ √λ`, the residual above which a query is declared degenerate.
    pub fn residual_threshold(&self) -> f64 {
        200.0 * (self.d() as f64).powi(4) * self.lambda.sqrt()
    }

    pub fn initial_rows(&self) -> (DenseMatrix, Vec<f64>) {
        let d = self.d();
        let m = self.u_perp.cols();
        let s = self.lambda.sqrt();
        let mut a = DenseMatrix::zeros(d + m, d);
        for i in 0..d {
            a[(i, i)] = s;
        }
        for j in 0..m {
            a.row_mut(d + j).copy_from_slice(&self.u_perp.column(j));
        }
        let mut b = vec![0.0; d];
        b.extend(std::iter::repeat_n(1.0 / (d as f64).sqrt(), m));
        (a, b)
    }

    /// `‖U_⊥ᵀx − 1/√d‖² + (⟨z, x⟩ − 10)²/100 + λ‖x‖²`, evaluated directly.
    pub fn loss(&self, x: &[f64], z: &[f64]) -> f64 {
        let w = 1.0 / (self.d() as f64).sqrt();
        let c = self.u_perp.tr_matvec(x).expect("gadget dims");
        let fit: f64 = c.iter().map(|v| (v - w) * (v - w)).sum();
        let r = dot(z, x) - 10.0;
        fit + r * r / 100.0 + self.lambda * dot(x, x)
    }
}

/// A solver's answer for one query: the minimizer estimate, the residual
/// `10 − ⟨z, x⟩` of the inserted row and the loss.
///
/// The residual is reported separately because the termination test
/// compares it against `200 d⁴ √λ`, far below the rounding error of
/// `10 − ⟨z, x⟩` computed from `x`.
#[derive(Clone, Debug)]
pub struct GadgetSolution {
    pub x: DenseVector,
    pub residual: f64,
    pub loss: f64,
}

/// Minimizes the gadget loss after inserting the row `(z/10, 1)`.
pub trait GadgetSolver {
    fn solve(&mut self, gadget: &LsrGadgetState, z: &[f64]) -> Result<GadgetSolution, ReductionError>;
}

/// Exact minimizer in the basis `[U_⊥ | z_U/‖z_U‖ | rest]`, where the normal
/// equations reduce to a diagonal-plus-rank-one system on `U_⊥` and a
/// scalar on `z_U`; the `rest` block has zero right-hand side.
#[derive(Clone, Copy, Debug, Default)]
pub struct StructuredSolver;

struct Structured {
    sol: GadgetSolution,
    zeta: f64,
    q: Option<DenseVector>,
}

fn structured(g: &LsrGadgetState, z: &[f64]) -> Result<Structured, ReductionError> {
    let d = g.d();
    if z.len() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: z.len() }.into());
    }
    let lam = g.lambda;
    let w = 1.0 / (d as f64).sqrt();
    let c = g.u_perp.tr_matvec(z)?;
    let s = g.u.tr_matvec(z)?;
    let zeta = norm(&s);
    let denom = zeta * zeta + 100.0 * lam;
    let kappa = lam / denom;
    let r0 = 10.0 - w * c.iter().sum::<f64>();
    // ((1+λ)I + κccᵀ) e = −(λ/√d)·1 + κ r0 c, by Sherman-Morrison
    let v: Vec<f64> = c.iter().map(|ci| -lam * w + kappa * r0 * ci).collect();
    let cv = dot(&c, &v);
    let cc = dot(&c, &c);
    let t = kappa * cv / (1.0 + lam + kappa * cc);
    let e: Vec<f64> = v.iter().zip(c.iter()).map(|(vi, ci)| (vi - t * ci) / (1.0 + lam)).collect();
    let r = r0 - dot(&c, &e);
    let gamma = zeta * r / denom;
    let residual = r * (100.0 * lam / denom);
    let alpha: Vec<f64> = e.iter().map(|ei| w + ei).collect();
    let mut x = g.u_perp.matvec(&alpha)?;
    let q = if zeta > 0.0 {
        let q = g.u.matvec(&s)?;
        let q: DenseVector = q.iter().map(|v| v / zeta).collect();
        for (xi, qi) in x.iter_mut().zip(q.iter()) {
            *xi += gamma * qi;
        }
        Some(q)
    } else {
        None
    };
    let loss = dot(&e, &e) + lam * (dot(&alpha, &alpha) + gamma * gamma) + residual * residual / 100.0;
    Ok(Structured { sol: GadgetSolution { x, residual, loss }, zeta, q })
}

impl GadgetSolver for StructuredSolver {
    fn solve(&mut self, gadget: &LsrGadgetState, z: &[f64]) -> Result<GadgetSolution, ReductionError> {
        Ok(structured(gadget, z)?.sol)
    }
}

/// The exact minimizer moved so that the loss becomes exactly `(1+ε)²` times
/// the optimum: a seeded step in the block orthogonal to `U_⊥` and `z_U`, or
/// along `z_U` when that block is empty.
#[derive(Clone, Debug)]
pub struct PerturbedSolver {
    epsilon: f64,
    rng: StreamRng,
}

impl PerturbedSolver {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self { epsilon, rng: stream_rng(seed, 7) }
    }
}

impl GadgetSolver for PerturbedSolver {
    fn solve(&mut self, gadget: &LsrGadgetState, z: &[f64]) -> Result<GadgetSolution, ReductionError> {
        let Structured { mut sol, zeta, q } = structured(gadget, z)?;
        let d = gadget.d();
        let lam = gadget.lambda;
        let extra = ((1.0 + self.epsilon).powi(2) - 1.0) * sol.loss;
        let mut g = gaussian_vector(d, &mut self.rng);
        let gn0 = norm(&g);
        let c = gadget.u_perp.tr_matvec(&g)?;
        let back = gadget.u_perp.matvec(&c)?;
        for (gi, bi) in g.iter_mut().zip(back.iter()) {
            *gi -= bi;
        }
        if let Some(q) = &q {
            let a = dot(&g, q);
            for (gi, qi) in g.iter_mut().zip(q.iter()) {
                *gi -= a * qi;
            }
        }
        let gn = norm(&g);
        if gn > 1e-8 * gn0 {
            let step = (extra / lam).sqrt() / gn;
            for (xi, gi) in sol.x.iter_mut().zip(g.iter()) {
                *xi += step * gi;
            }
            sol.loss += lam * step * step * gn * gn;
        } else if let Some(q) = &q {
            let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let s = sign * (extra / (zeta * zeta / 100.0 + lam)).sqrt();
            for (xi, qi) in sol.x.iter_mut().zip(q.iter()) {
                *xi += s * qi;
            }
            // the cross term vanishes at the optimum
            sol.residual -= s * zeta;
            sol.loss += s * s * (zeta * zeta / 100.0 + lam);
        }
        Ok(sol)
    }
}

/// Literal insert / solve / delete on exact recursive least squares. Only
/// meaningful for moderate `λ` (the initial Gram matrix is `λI + U_⊥U_⊥ᵀ`).
#[derive(Clone, Debug)]
pub struct DenseGadgetSolver {
    state: KalmanState,
}

impl DenseGadgetSolver {
    pub fn new(gadget: &LsrGadgetState) -> Result<Self, ReductionError> {
        let (a, b) = gadget.initial_rows();
        Ok(Self { state: KalmanState::new(&a, &b)? })
    }
}

impl GadgetSolver for DenseGadgetSolver {
    fn solve(&mut self, gadget: &LsrGadgetState, z: &[f64]) -> Result<GadgetSolution, ReductionError> {
        let row: Vec<f64> = z.iter().map(|v| v / 10.0).collect();
        let x = self.state.insert(&row, 1.0)?;
        self.state.delete(self.state.len() - 1)?;
        let residual = 10.0 - dot(z, &x);
        let loss = gadget.loss(&x, z);
        Ok(GadgetSolution { x, residual, loss })
    }
}

/// Approximate projection of a unit vector `z` onto `U` from one regression
/// solve: zero when the termination test fires, otherwise `ξ*·(x − x*)` with
/// `ξ*` the least-squares fit of `z`.
pub fn lsr_projection_oracle(
    gadget: &LsrGadgetState,
    z: &[f64],
    solver: &mut dyn GadgetSolver,
) -> Result<DenseVector, ReductionError> {
    let d = gadget.d();
    if z.len() != d {
        return Err(LinalgError::DimensionMismatch { expected: d, found: z.len() }.into());
    }
    if (norm(z) - 1.0).abs() > 1e-9 {
        return Err(ReductionError::InvalidParameter("query must be a unit vector".into()));
    }
    let sol = solver.solve(gadget, z)?;
    if !sol.x.iter().all(|v| v.is_finite()) {
        return Err(ReductionError::SolverFailure("non-finite solution".into()));
    }
    let y: DenseVector = sol.x.iter().zip(gadget.x_star.iter()).map(|(a, b)| a - b).collect();
    let yn = norm(&y);
    if yn >= (d as f64).powi(3) || sol.residual.abs() >= gadget.residual_threshold() || yn == 0.0 {
        return Ok(DenseVector::zeros(d));
    }
    let xi = dot(z, &y) / (yn * yn);
    Ok(y.iter().map(|v| xi * v).collect())
}

/// [`lsr_projection_oracle`] as a [`ProjectionOracle`], advertising
/// `(1/3, C_r/d³)`. Queries are scaled to unit norm and the answer scaled back.
pub struct LsrProjection<S> {
    gadget: LsrGadgetState,
    solver: S,
}

impl<S: GadgetSolver> LsrProjection<S> {
    pub fn new(gadget: LsrGadgetState, solver: S) -> Self {
        Self { gadget, solver }
    }

    pub fn gadget(&self) -> &LsrGadgetState {
        &self.gadget
    }
}

impl<S: GadgetSolver> ProjectionOracle for LsrProjection<S> {
    fn alpha(&self) -> f64 {
        1.0 / 3.0
    }

    fn beta(&self) -> f64 {
        GADGET_C_R / (self.gadget.d() as f64).powi(3)
    }

    fn dim(&self) -> usize {
        self.gadget.d()
    }

    fn project(&mut self, z: &[f64]) -> Result<DenseVector, ReductionError> {
        let n = norm(z);
        if n == 0.0 {
            return Ok(DenseVector::zeros(z.len()));
        }
        let unit: Vec<f64> = z.iter().map(|v| v / n).collect();
        let y = lsr_projection_oracle(&self.gadget, &unit, &mut self.solver)?;
        Ok(y.iter().map(|v| v * n).collect())
    }
}
