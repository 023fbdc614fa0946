use rand::Rng;

use crate::matcore::{dot, eig_sym, solve_gram, Cholesky, DenseMatrix, DenseVector, LinalgError};
use crate::rng::{stream_rng, StreamRng};
use crate::sketch::{jl_apply, jl_generate, jl_generate_gaussian, JlSketch};

use super::config::{SamplerConfig, SketchBackend, JL_EPS};
use super::DynLsrError;

/// One call to the sampler: the estimate, the probability it produced and
/// the uniform draw that decided the outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRecord {
    /// Insertion index, starting at 0.
    pub t: usize,
    pub tau: f64,
    pub p: f64,
    pub draw: f64,
    pub nu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeverageEstimate {
    pub tau: f64,
    pub p: f64,
    /// `0` or `1/√p`.
    pub nu: f64,
}

#[derive(Clone, Debug)]
pub(crate) enum Backend {
    /// Stores `H`, `B = N·H`, `B̃ = J·B` and `G` explicitly.
    Explicit { h: DenseMatrix, b: DenseMatrix, btilde: DenseMatrix, g: DenseMatrix },
    /// Only the Cholesky factor `R` of `NᵀN`. `H`, `G` and `B̃ = Z·R⁻ᵀ` are
    /// applied through triangular solves.
    Factored { chol: Cholesky },
}

/// Insertion-only least-squares structure over rows `m = [a; β]`.
///
/// Keeps the reweighted kept rows `N`, `H = (NᵀN)⁻¹`, the sketch
/// `B̃ ≈ J·N·H` used to estimate leverage, and the weighted normal-equation
/// pieces `G = (AᵀD²A)⁻¹`, `u = AᵀD²b`, `x = G·u`. With the factored
/// backend `H`, `G` and `B̃` are implicit in the Cholesky factor of `NᵀN`.
#[derive(Clone, Debug)]
pub struct LsrSketchState {
    pub(crate) cfg: SamplerConfig,
    pub(crate) d: usize,
    pub(crate) t: usize,
    pub(crate) n: DenseMatrix,
    pub(crate) backend: Backend,
    pub(crate) j: JlSketch,
    pub(crate) u: DenseVector,
    pub(crate) x: DenseVector,
    pub(crate) weights: Vec<f64>,
    pub(crate) sample_rng: StreamRng,
    pub(crate) sketch_rng: StreamRng,
    pub(crate) replay: Vec<SampleRecord>,
    pub(crate) since_recompute: usize,
}

/// Smallest and largest singular value of a square matrix.
pub fn singular_value_range(m: &DenseMatrix) -> Result<(f64, f64), LinalgError> {
    let eig = eig_sym(&m.gram())?;
    let n = eig.values.len();
    Ok((eig.values[n - 1].max(0.0).sqrt(), eig.values[0].max(0.0).sqrt()))
}

/// `σ_min` from `M⁰`, and `σ_max` from `bound` or, if absent, from `M⁰`.
pub fn estimate_sigma_bounds(m0: &DenseMatrix, bound: Option<f64>) -> Result<(f64, f64), LinalgError> {
    let (lo, hi) = singular_value_range(m0)?;
    Ok((lo, bound.unwrap_or(hi).max(lo)))
}

/// `mᵀ (RᵀR)⁻¹ m` for the kept rows `rows`.
pub fn exact_online_leverage(rows: &DenseMatrix, m: &[f64]) -> Result<f64, LinalgError> {
    if rows.cols() != m.len() {
        return Err(LinalgError::DimensionMismatch { expected: rows.cols(), found: m.len() });
    }
    let y = solve_gram(&rows.gram(), m)?;
    Ok(dot(m, &y))
}

fn stack(a0: &DenseMatrix, b0: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(a0.rows(), a0.cols() + 1, |i, j| if j < a0.cols() { a0[(i, j)] } else { b0[i] })
}

fn inverse_or_rank_deficient(k: &DenseMatrix, sigma_found: f64, required: f64) -> Result<(Cholesky, DenseMatrix), DynLsrError> {
    let chol = Cholesky::new(k).map_err(|_| DynLsrError::RankDeficientInit { found: sigma_found, required })?;
    let inv = chol.inverse();
    Ok((chol, inv))
}

/// `x = R₁₁⁻¹ r₁₂` where `R = [R₁₁ r₁₂; 0 ρ]` factors the Gram of `[A b]`.
fn solution_from_factor(chol: &Cholesky, d: usize) -> DenseVector {
    let r = chol.upper();
    let mut x: DenseVector = (0..d).map(|i| r[(i, d)]).collect();
    for i in (0..d).rev() {
        let row = r.row(i);
        let s = dot(&row[i + 1..d], &x[i + 1..d]);
        x[i] = (x[i] - s) / row[i];
    }
    x
}

impl LsrSketchState {
    /// Builds the structure from an initial `(d+1) x d` block `A0` with labels `b0`.
    pub fn preprocess(a0: &DenseMatrix, b0: &[f64], cfg: SamplerConfig) -> Result<Self, DynLsrError> {
        cfg.validate()?;
        let d = a0.cols();
        if d == 0 || a0.rows() != d + 1 || b0.len() != d + 1 {
            return Err(DynLsrError::InvalidParameter(format!(
                "initial block must be (d+1) x d with d+1 labels, got {} x {} and {}",
                a0.rows(),
                a0.cols(),
                b0.len()
            )));
        }
        let m0 = stack(a0, b0);
        let (smin, _) = singular_value_range(&m0)?;
        if !(smin >= cfg.sigma_min * (1.0 - 1e-12)) {
            return Err(DynLsrError::RankDeficientInit { found: smin, required: cfg.sigma_min });
        }
        let gram = m0.gram();
        let u: DenseVector = (0..d).map(|i| gram[(i, d)]).collect();
        let mut sketch_rng = stream_rng(cfg.seed, 1);
        let sample_rng = stream_rng(cfg.seed, 0);
        let s = d + 1;
        let (backend, j, x) = match cfg.backend {
            SketchBackend::Explicit => {
                let (_, h) = inverse_or_rank_deficient(&gram, smin, cfg.sigma_min)?;
                let (_, g) = inverse_or_rank_deficient(&gram.top_left(d, d), smin, cfg.sigma_min)?;
                let x = g.matvec(&u)?;
                let b = m0.matmul(&h)?;
                let j = jl_generate(s, cfg.horizon, JL_EPS, cfg.jl_delta(), &cfg.jl, &mut sketch_rng)?;
                let btilde = jl_apply(&j, &b)?;
                (Backend::Explicit { h, b, btilde, g }, j, x)
            }
            SketchBackend::Factored => {
                let chol = Cholesky::new(&gram)
                    .map_err(|_| DynLsrError::RankDeficientInit { found: smin, required: cfg.sigma_min })?;
                let j = jl_generate_gaussian(d + 1, cfg.horizon, JL_EPS, cfg.jl_delta(), &cfg.jl, &mut sketch_rng)?;
                let x = solution_from_factor(&chol, d);
                (Backend::Factored { chol }, j, x)
            }
        };
        Ok(Self {
            d,
            t: 0,
            n: m0,
            backend,
            j,
            u,
            x,
            weights: vec![1.0; s],
            sample_rng,
            sketch_rng,
            replay: Vec::new(),
            since_recompute: 0,
            cfg,
        })
    }

    fn refresh_btilde(&mut self) -> Result<(), DynLsrError> {
        if let Backend::Explicit { b, btilde, .. } = &mut self.backend {
            *btilde = jl_apply(&self.j, b)?;
        }
        Ok(())
    }

    fn fresh_sketch(&mut self) -> Result<(), DynLsrError> {
        let delta = self.cfg.jl_delta();
        self.j = match self.cfg.backend {
            SketchBackend::Explicit => {
                jl_generate(self.s(), self.cfg.horizon, JL_EPS, delta, &self.cfg.jl, &mut self.sketch_rng)?
            }
            SketchBackend::Factored => {
                jl_generate_gaussian(self.d + 1, self.cfg.horizon, JL_EPS, delta, &self.cfg.jl, &mut self.sketch_rng)?
            }
        };
        self.refresh_btilde()
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of kept rows, including the `d+1` initial ones.
    pub fn s(&self) -> usize {
        self.n.rows()
    }

    /// Number of insertions so far.
    pub fn insertions(&self) -> usize {
        self.t
    }

    pub fn n_matrix(&self) -> &DenseMatrix {
        &self.n
    }

    /// `H = (NᵀN)⁻¹`. Formed from the factor by the factored backend.
    pub fn h(&self) -> DenseMatrix {
        match &self.backend {
            Backend::Explicit { h, .. } => h.clone(),
            Backend::Factored { chol } => chol.inverse(),
        }
    }

    /// `B = N·H`. Stored by the explicit backend, formed on demand otherwise.
    pub fn b(&self) -> DenseMatrix {
        match &self.backend {
            Backend::Explicit { b, .. } => b.clone(),
            Backend::Factored { .. } => self.n.matmul(&self.h()).expect("N and H conform"),
        }
    }

    /// The sketched matrix `B̃` (`J·B`, or `Z·R⁻ᵀ` for the factored backend).
    pub fn btilde(&self) -> DenseMatrix {
        match &self.backend {
            Backend::Explicit { btilde, .. } => btilde.clone(),
            Backend::Factored { chol } => {
                let mut out = self.j.entries.clone();
                for i in 0..out.rows() {
                    chol.solve_upper_in_place(out.row_mut(i));
                }
                out
            }
        }
    }

    pub fn sketch(&self) -> &JlSketch {
        &self.j
    }

    /// `G = (AᵀD²A)⁻¹`.
    pub fn g(&self) -> DenseMatrix {
        match &self.backend {
            Backend::Explicit { g, .. } => g.clone(),
            Backend::Factored { chol } => {
                let r11 = chol.upper().top_left(self.d, self.d);
                Cholesky::from_upper(r11).expect("leading block of a factor").inverse()
            }
        }
    }

    pub fn u(&self) -> &DenseVector {
        &self.u
    }

    /// Per-row weights `ν`, one per row seen (initial rows included).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn replay_log(&self) -> &[SampleRecord] {
        &self.replay
    }

    /// The stored solution `x`.
    pub fn current_solution(&self) -> DenseVector {
        self.x.clone()
    }

    /// `‖B m‖² = mᵀ H m`, the leverage of `m` against the kept rows.
    pub fn sampled_leverage(&self, m: &[f64]) -> f64 {
        match &self.backend {
            Backend::Explicit { h, .. } => {
                let hm = h.matvec(m).expect("m has d+1 entries");
                dot(m, &hm)
            }
            Backend::Factored { chol } => {
                let mut w = m.to_vec();
                chol.solve_lower_in_place(&mut w);
                dot(&w, &w)
            }
        }
    }

    /// `τ = ‖B̃ m‖²`. The explicit backend skips zero entries of `m`; the
    /// factored one evaluates `‖Z·(R⁻ᵀ m)‖²`.
    pub fn estimate_tau(&self, m: &[f64]) -> f64 {
        match &self.backend {
            Backend::Explicit { btilde, .. } => {
                let nz: Vec<usize> = (0..m.len()).filter(|&i| m[i] != 0.0).collect();
                let mut tau = 0.0;
                for r in 0..btilde.rows() {
                    let row = btilde.row(r);
                    let v: f64 =
                        if nz.len() == m.len() { dot(row, m) } else { nz.iter().map(|&i| row[i] * m[i]).sum() };
                    tau += v * v;
                }
                tau
            }
            Backend::Factored { chol } => {
                let mut w = m.to_vec();
                chol.solve_lower_in_place(&mut w);
                let z = &self.j.entries;
                (0..z.rows()).map(|r| dot(z.row(r), &w).powi(2)).sum()
            }
        }
    }

    /// Estimates the leverage of `m` and decides whether to keep it. The
    /// uniform draw comes from the state's sampling stream and is logged.
    pub fn sample(&mut self, m: &[f64]) -> Result<LeverageEstimate, DynLsrError> {
        if m.len() != self.d + 1 {
            return Err(LinalgError::DimensionMismatch { expected: self.d + 1, found: m.len() }.into());
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(DynLsrError::InvalidParameter("row has non-finite entries".into()));
        }
        let tau = self.estimate_tau(m);
        let p = self.cfg.probability(tau, self.d);
        let draw: f64 = self.sample_rng.random();
        let nu = if p > 0.0 && draw < p { 1.0 / p.sqrt() } else { 0.0 };
        self.replay.push(SampleRecord { t: self.t, tau, p, draw, nu });
        Ok(LeverageEstimate { tau, p, nu })
    }

    /// Appends row `(a, beta)` and returns the current solution.
    pub fn insert(&mut self, a: &[f64], beta: f64) -> Result<DenseVector, DynLsrError> {
        if self.t >= self.cfg.horizon {
            return Err(DynLsrError::HorizonExceeded { horizon: self.cfg.horizon });
        }
        if a.len() != self.d {
            return Err(LinalgError::DimensionMismatch { expected: self.d, found: a.len() }.into());
        }
        let mut m = Vec::with_capacity(self.d + 1);
        m.extend_from_slice(a);
        m.push(beta);
        let est = self.sample(&m)?;
        if est.nu != 0.0 {
            self.update_members(&m, est.p)?;
        } else {
            self.weights.push(0.0);
        }
        self.t += 1;
        Ok(self.x.clone())
    }

    /// Adds `m/√p` to the kept rows and refreshes every maintained quantity,
    /// including a brand new sketch.
    pub fn update_members(&mut self, m: &[f64], p: f64) -> Result<(), DynLsrError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(DynLsrError::InvalidParameter(format!("p = {p} outside (0, 1]")));
        }
        if m.len() != self.d + 1 {
            return Err(LinalgError::DimensionMismatch { expected: self.d + 1, found: m.len() }.into());
        }
        let d = self.d;
        let sp = p.sqrt();
        let scaled: Vec<f64> = m.iter().map(|v| v / sp).collect();
        let a = &m[..d];
        let beta = m[d];
        for (ui, ai) in self.u.iter_mut().zip(a) {
            *ui += beta * ai / p;
        }

        match &mut self.backend {
            Backend::Explicit { h, b, g, .. } => {
                let hm = h.matvec(m)?;
                let q = dot(m, &hm);
                let coef = -1.0 / (p * (1.0 + q / p));
                // N·ΔH = coef·(N H m)(H m)ᵀ and N H m = B m
                let bm = b.matvec(m)?;
                b.rank1_update(coef, &bm, &hm);
                h.sym_rank1_update(coef, &hm);
                let new_row: Vec<f64> = h.matvec(m)?.iter().map(|v| v / sp).collect();
                b.push_row(&new_row)?;
                let ga = g.matvec(a)?;
                let c = dot(a, &ga);
                g.sym_rank1_update(-1.0 / (p + c), &ga);
                self.x = g.matvec(&self.u)?;
            }
            Backend::Factored { chol } => {
                chol.rank1_update(&scaled);
                self.x = solution_from_factor(chol, d);
            }
        }
        self.n.push_row(&scaled)?;
        self.weights.push(1.0 / sp);

        self.since_recompute += 1;
        if let Some(every) = self.cfg.recompute_interval {
            if self.since_recompute >= every {
                self.rebuild()?;
            }
        }
        self.fresh_sketch()
    }

    /// Rebuilds `H`, `B`, `G`, `u`, `x` from the kept rows `N`, then `B̃`
    /// with the current sketch.
    pub fn recompute(&mut self) -> Result<(), DynLsrError> {
        self.rebuild()?;
        self.refresh_btilde()
    }

    fn rebuild(&mut self) -> Result<(), DynLsrError> {
        let d = self.d;
        let gram = self.n.gram();
        let chol = Cholesky::with_jitter(&gram)?;
        self.u = (0..d).map(|i| gram[(i, d)]).collect();
        match &mut self.backend {
            Backend::Explicit { h, b, g, .. } => {
                *h = chol.inverse();
                *b = self.n.matmul(h)?;
                *g = Cholesky::with_jitter(&gram.top_left(d, d))?.inverse();
                self.x = g.matvec(&self.u)?;
            }
            Backend::Factored { chol: c } => {
                self.x = solution_from_factor(&chol, d);
                *c = chol;
            }
        }
        self.since_recompute = 0;
        Ok(())
    }

    /// Largest `|·|` entry of `H·NᵀN − I`, scaled by `‖NᵀN‖_F`.
    pub fn inverse_drift(&self) -> f64 {
        let gram = self.n.gram();
        let p = self.h().matmul(&gram).expect("square");
        let dev = p.sub(&DenseMatrix::identity(self.d + 1)).expect("square").frobenius_norm();
        dev / gram.frobenius_norm().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::{Mode, SamplingRule};
    use super::*;
    use crate::matcore::{normal_equation_solve, spd_inverse};
    use crate::rng::gaussian_vector;
    use crate::sketch::JlConfig;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cfg(backend: SketchBackend) -> SamplerConfig {
        let mut c = SamplerConfig::new(0.1, 0.1, 1000);
        c.backend = backend;
        c
    }

    fn split(m0: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
        let d = m0.cols() - 1;
        let idx: Vec<usize> = (0..d).collect();
        (m0.select_columns(&idx), m0.column(d).into_vec())
    }

    fn random_m0(d: usize, seed: u64) -> DenseMatrix {
        let mut rng = stream_rng(seed, 9);
        DenseMatrix::from_fn(d + 1, d + 1, |i, j| rng.sample::<f64, _>(StandardNormal) + if i == j { 3.0 } else { 0.0 })
    }

    #[test]
    fn identity_init() {
        for backend in [SketchBackend::Explicit, SketchBackend::Factored] {
            let m0 = DenseMatrix::identity(4);
            let (a0, b0) = split(&m0);
            let st = LsrSketchState::preprocess(&a0, &b0, cfg(backend)).unwrap();
            assert_eq!(st.h(), DenseMatrix::identity(4));
            assert!(st.b().sub(&DenseMatrix::identity(4)).unwrap().max_abs() == 0.0);
            assert_eq!(st.g(), DenseMatrix::identity(3));
            assert_eq!(st.u().as_slice(), &[0.0; 3]);
            assert_eq!(st.current_solution().as_slice(), &[0.0; 3]);
            assert_eq!(st.s(), 4);
        }
    }

    #[test]
    fn scaled_identity_init() {
        let mut m0 = DenseMatrix::identity(3);
        m0.scale(2.0);
        let (a0, b0) = split(&m0);
        let st = LsrSketchState::preprocess(&a0, &b0, cfg(SketchBackend::Explicit)).unwrap();
        let mut want = DenseMatrix::identity(3);
        want.scale(0.25);
        assert!(st.h().sub(&want).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_init_is_rejected() {
        let m0 = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Factored);
        c.sigma_min = 1e-6;
        assert!(matches!(LsrSketchState::preprocess(&a0, &b0, c), Err(DynLsrError::RankDeficientInit { .. })));
    }

    #[test]
    fn shape_is_checked() {
        let a0 = DenseMatrix::zeros(3, 3);
        assert!(matches!(
            LsrSketchState::preprocess(&a0, &[0.0; 3], cfg(SketchBackend::Factored)),
            Err(DynLsrError::InvalidParameter(_))
        ));
    }

    #[test]
    fn zero_row_is_never_kept() {
        let m0 = random_m0(3, 1);
        let (a0, b0) = split(&m0);
        let mut st = LsrSketchState::preprocess(&a0, &b0, cfg(SketchBackend::Factored)).unwrap();
        let est = st.sample(&[0.0; 4]).unwrap();
        assert_eq!(est, LeverageEstimate { tau: 0.0, p: 0.0, nu: 0.0 });
    }

    #[test]
    fn large_leverage_is_kept_deterministically() {
        let m0 = DenseMatrix::identity(3);
        let (a0, b0) = split(&m0);
        let mut st = LsrSketchState::preprocess(&a0, &b0, cfg(SketchBackend::Explicit)).unwrap();
        let est = st.sample(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(est.p, 1.0);
        assert_eq!(est.nu, 1.0);
    }

    #[test]
    fn unkept_row_leaves_solution_unchanged() {
        // a huge initial Gram makes every later leverage tiny
        let mut m0 = random_m0(3, 5);
        m0.scale(1e7);
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Factored);
        c.rule = SamplingRule::Empirical;
        c.epsilon = 0.5;
        let mut st = LsrSketchState::preprocess(&a0, &b0, c).unwrap();
        let before = st.current_solution();
        let x = st.insert(&[0.1, 0.2, -0.3], 0.7).unwrap();
        assert_eq!(st.replay_log()[0].nu, 0.0);
        assert_eq!(x, before);
        assert_eq!(st.s(), 4);
        assert_eq!(st.weights().len(), 5);
    }

    #[test]
    fn one_dimensional_insert_by_hand() {
        // rows (a, b): (1, 0), (0, 1), (1, 1). A = [1, 0, 1], b = [0, 1, 1], so x = 1/2
        for backend in [SketchBackend::Explicit, SketchBackend::Factored] {
            let m0 = DenseMatrix::identity(2);
            let (a0, b0) = split(&m0);
            let mut st = LsrSketchState::preprocess(&a0, &b0, cfg(backend)).unwrap();
            let x = st.insert(&[1.0], 1.0).unwrap();
            assert_eq!(st.replay_log()[0].p, 1.0);
            let a = DenseMatrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0]]).unwrap();
            let oracle = normal_equation_solve(&a, &[0.0, 1.0, 1.0]).unwrap();
            assert!((x[0] - oracle[0]).abs() < 1e-15);
            assert!((x[0] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_update_adds_zero_row() {
        let m0 = random_m0(2, 3);
        let (a0, b0) = split(&m0);
        let mut st = LsrSketchState::preprocess(&a0, &b0, cfg(SketchBackend::Explicit)).unwrap();
        let h0 = st.h().clone();
        st.update_members(&[0.0; 3], 1.0).unwrap();
        assert_eq!(st.h(), h0);
        assert_eq!(st.n_matrix().row(3), &[0.0; 3]);
        assert!(st.update_members(&[0.0; 3], 0.0).is_err());
        assert!(st.update_members(&[0.0; 3], 1.5).is_err());
    }

    #[test]
    fn update_matches_direct_inverse() {
        for backend in [SketchBackend::Explicit, SketchBackend::Factored] {
            let m0 = random_m0(4, 8);
            let (a0, b0) = split(&m0);
            let mut st = LsrSketchState::preprocess(&a0, &b0, cfg(backend)).unwrap();
            let m1 = [0.3, -1.2, 0.5, 2.0, 0.1];
            let m2 = [1.1, 0.4, -0.7, 0.0, 1.5];
            st.update_members(&m1, 1.0).unwrap();
            let mut gram = m0.gram();
            gram.sym_rank1_update(1.0, &m1);
            let want = spd_inverse(&gram).unwrap();
            assert!(st.h().sub(&want).unwrap().max_abs() < 1e-10);
            st.update_members(&m2, 0.25).unwrap();
            gram.sym_rank1_update(4.0, &m2);
            let want = spd_inverse(&gram).unwrap();
            assert!(st.h().sub(&want).unwrap().max_abs() < 1e-8);
            let b_want = st.n_matrix().matmul(&want).unwrap();
            assert!(st.b().sub(&b_want).unwrap().max_abs() < 1e-8);
            let gx = st.g().matvec(st.u()).unwrap();
            assert!(st.current_solution().iter().zip(gx.iter()).all(|(p, q)| (p - q).abs() < 1e-10));
        }
    }

    #[test]
    fn exact_online_leverage_small_cases() {
        let eye = DenseMatrix::identity(3);
        assert!((exact_online_leverage(&eye, &[1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((exact_online_leverage(&eye, &[0.0, 3.0, 4.0]).unwrap() - 25.0).abs() < 1e-12);
        let sing = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(exact_online_leverage(&sing, &[1.0, 0.0]), Err(LinalgError::SingularGram));
    }

    #[test]
    fn horizon_is_enforced() {
        let m0 = random_m0(2, 4);
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Factored);
        c.horizon = 2;
        let mut st = LsrSketchState::preprocess(&a0, &b0, c).unwrap();
        st.insert(&[1.0, 0.0], 1.0).unwrap();
        st.insert(&[0.0, 1.0], 1.0).unwrap();
        assert_eq!(st.insert(&[1.0, 1.0], 1.0), Err(DynLsrError::HorizonExceeded { horizon: 2 }));
    }

    #[test]
    fn draws_replay_with_same_seed() {
        let m0 = random_m0(3, 2);
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Factored);
        c.rule = SamplingRule::Empirical;
        c.epsilon = 0.5;
        let run = || {
            let mut st = LsrSketchState::preprocess(&a0, &b0, c.clone()).unwrap();
            let mut rng = stream_rng(77, 0);
            for _ in 0..200 {
                let a = gaussian_vector(3, &mut rng);
                st.insert(&a, rng.sample(StandardNormal)).unwrap();
            }
            st.replay_log().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn recompute_agrees_with_incremental() {
        let m0 = random_m0(3, 12);
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Explicit);
        c.rule = SamplingRule::KeepAll;
        let mut inc = LsrSketchState::preprocess(&a0, &b0, c.clone()).unwrap();
        c.recompute_interval = Some(3);
        let mut rec = LsrSketchState::preprocess(&a0, &b0, c).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..20 {
            let a = gaussian_vector(3, &mut rng);
            let beta: f64 = rng.sample(StandardNormal);
            let x1 = inc.insert(&a, beta).unwrap();
            let x2 = rec.insert(&a, beta).unwrap();
            for (p, q) in x1.iter().zip(x2.iter()) {
                assert!((p - q).abs() < 1e-10);
            }
        }
        assert!(rec.h().sub(&inc.h()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn adaptive_mode_keeps_everything_at_small_scale() {
        let m0 = random_m0(3, 6);
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Factored);
        c.mode = Mode::Adaptive;
        let mut st = LsrSketchState::preprocess(&a0, &b0, c).unwrap();
        let mut rng = stream_rng(6, 0);
        for _ in 0..50 {
            st.insert(&gaussian_vector(3, &mut rng), 1.0).unwrap();
        }
        assert_eq!(st.s(), 54);
    }

    #[test]
    fn sampled_leverage_equals_b_row_norm() {
        let m0 = random_m0(3, 21);
        let (a0, b0) = split(&m0);
        let mut c = cfg(SketchBackend::Explicit);
        c.jl = JlConfig::with_cap(8);
        let st = LsrSketchState::preprocess(&a0, &b0, c).unwrap();
        let m = [0.2, -0.4, 1.0, 0.3];
        let bm = st.b().matvec(&m).unwrap();
        assert!((st.sampled_leverage(&m) - dot(&bm, &bm)).abs() < 1e-12);
        let direct = exact_online_leverage(&m0, &m).unwrap();
        assert!((st.sampled_leverage(&m) - direct).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn invariants_hold_along_random_streams(d in 1usize..6, seed in any::<u64>(), explicit in any::<bool>()) {
            let m0 = random_m0(d, seed);
            let (a0, b0) = split(&m0);
            let mut c = SamplerConfig::new(0.5, 0.1, 60);
            c.rule = SamplingRule::Empirical;
            c.seed = seed;
            c.backend = if explicit { SketchBackend::Explicit } else { SketchBackend::Factored };
            let mut st = LsrSketchState::preprocess(&a0, &b0, c).unwrap();
            let mut rng = stream_rng(seed, 3);
            for _ in 0..60 {
                let a = gaussian_vector(d, &mut rng);
                st.insert(&a, rng.sample(StandardNormal)).unwrap();
                let gram = st.n_matrix().gram();
                let prod = st.h().matmul(&gram).unwrap();
                let dev = prod.sub(&DenseMatrix::identity(d + 1)).unwrap().max_abs();
                prop_assert!(dev <= 1e-8 * gram.frobenius_norm().max(1.0));
                let b_direct = st.n_matrix().matmul(&st.h()).unwrap();
                prop_assert!(st.b().sub(&b_direct).unwrap().max_abs() <= 1e-8);
                let gx = st.g().matvec(st.u()).unwrap();
                for (p, q) in st.current_solution().iter().zip(gx.iter()) {
                    prop_assert!((p - q).abs() <= 1e-8 * (1.0 + q.abs()));
                }
                let nonzero = st.weights().iter().filter(|&&w| w != 0.0).count();
                prop_assert_eq!(nonzero, st.s());
            }
        }
    }
}
