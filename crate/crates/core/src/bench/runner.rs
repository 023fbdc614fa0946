use rayon::prelude::*;

use crate::baselines::{KalmanState, LeverageReference, RowSamplerState, SamplerPolicy};
use crate::dynlsr::{LsrSketchState, Mode, SamplerConfig, SamplingRule, SketchBackend};
use crate::matcore::{dot, normal_equation_solve, Cholesky, DenseMatrix, DenseVector, LinalgError, CONDITION_FLOOR};
use crate::sketch::JlConfig;

use super::datagen::{ResidualAdversary, RowSource};
use super::timing::{Section, Timeline};
use super::{BenchError, BenchRecord, Method};

pub const DEFAULT_INIT_FRACTION: f64 = 0.1;

/// Sketch rows used by our method in the benchmarks.
pub const OURS_K_MAX: usize = 20;

/// Relative size of the ridge added to a rank-deficient initial block.
pub const INIT_RIDGE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub a: DenseMatrix,
    pub b: DenseVector,
}

impl Dataset {
    pub fn new(name: impl Into<String>, a: DenseMatrix, b: DenseVector) -> Self {
        Self { name: name.into(), a, b }
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Leading fraction of the rows used to initialize every method.
    pub init_fraction: f64,
    /// Failure probability passed to our method.
    pub delta: f64,
    pub seed: u64,
    /// Each cell runs this many times; the reported time is the median.
    pub repeats: usize,
    pub ours_rule: SamplingRule,
    pub ours_backend: SketchBackend,
    pub k_max: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            init_fraction: DEFAULT_INIT_FRACTION,
            delta: 0.1,
            seed: 0,
            repeats: 1,
            ours_rule: SamplingRule::Empirical,
            ours_backend: SketchBackend::Factored,
            k_max: OURS_K_MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchCell {
    pub method: Method,
    pub parameter: f64,
}

impl BenchCell {
    pub fn new(method: Method, parameter: f64) -> Self {
        Self { method, parameter: if method.takes_parameter() { parameter } else { 0.0 } }
    }
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Replaces the rows `[A | b]` by the `(d+1) x (d+1)` Cholesky factor of
/// their Gram matrix, which has the same normal equations. A singular or
/// badly conditioned block first gets `λ₀·I` added, the same as appending
/// `√λ₀`-scaled identity rows, with `λ₀` = 1e-6 times the mean squared row norm.
pub fn compress_initial_block(a: &DenseMatrix, b: &[f64]) -> Result<(DenseMatrix, DenseVector), BenchError> {
    let (n, d) = (a.rows(), a.cols());
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: b.len() }.into());
    }
    if n == 0 {
        return Err(BenchError::InvalidParameter("empty initial block".into()));
    }
    let m = DenseMatrix::from_fn(n, d + 1, |i, j| if j < d { a[(i, j)] } else { b[i] });
    let mut gram = m.gram();
    let chol = match Cholesky::new(&gram) {
        Ok(c) if c.rcond() >= CONDITION_FLOOR => c,
        _ => {
            let lambda0 = INIT_RIDGE * gram.trace() / n as f64;
            let lambda0 = if lambda0 > 0.0 { lambda0 } else { INIT_RIDGE };
            for i in 0..=d {
                gram[(i, i)] += lambda0;
            }
            Cholesky::new(&gram)?
        }
    };
    let r = chol.upper();
    let a0 = DenseMatrix::from_fn(d + 1, d, |i, j| r[(i, j)]);
    let b0 = (0..=d).map(|i| r[(i, d)]).collect();
    Ok((a0, b0))
}

enum Solver {
    Kalman(KalmanState),
    Ours(Box<LsrSketchState>),
    Sampler(RowSamplerState),
}

impl Solver {
    fn build(method: Method, parameter: f64, a0: &DenseMatrix, b0: &[f64], stream_len: usize, opts: &RunOptions, mode: Mode) -> Result<Self, BenchError> {
        Ok(match method {
            Method::Kalman => Solver::Kalman(KalmanState::new(a0, b0)?),
            Method::Ours => {
                let mut cfg = SamplerConfig::new(parameter, opts.delta, stream_len.max(1));
                cfg.rule = opts.ours_rule;
                cfg.backend = opts.ours_backend;
                cfg.mode = mode;
                cfg.jl = JlConfig::with_cap(opts.k_max);
                cfg.sigma_min = f64::MIN_POSITIVE;
                cfg.seed = opts.seed;
                Solver::Ours(Box::new(LsrSketchState::preprocess(a0, b0, cfg)?))
            }
            Method::RowSampling => {
                let policy = SamplerPolicy::ExactLeverage { epsilon: parameter, reference: LeverageReference::KeptSet };
                Solver::Sampler(RowSamplerState::new(a0, b0, policy, opts.seed)?)
            }
            Method::Uniform => Solver::Sampler(RowSamplerState::new(a0, b0, SamplerPolicy::Uniform { p: parameter }, opts.seed)?),
        })
    }

    fn insert(&mut self, a: &[f64], beta: f64) -> Result<(), BenchError> {
        match self {
            Solver::Kalman(s) => {
                s.insert(a, beta)?;
            }
            Solver::Ours(s) => {
                s.insert(a, beta)?;
            }
            Solver::Sampler(s) => {
                s.insert(a, beta)?;
            }
        }
        Ok(())
    }

    fn solution(&self) -> DenseVector {
        match self {
            Solver::Kalman(s) => s.solution().clone(),
            Solver::Ours(s) => s.current_solution(),
            Solver::Sampler(s) => s.solution().clone(),
        }
    }

    /// Streamed rows kept, given `init` rows in the starting block.
    fn rows_sampled(&self, init: usize) -> usize {
        match self {
            Solver::Kalman(s) => s.len() - init,
            Solver::Ours(s) => s.s() - init,
            Solver::Sampler(s) => s.kept() - init,
        }
    }
}

fn residual_norm(a: &DenseMatrix, b: &[f64], x: &[f64]) -> f64 {
    (0..a.rows()).map(|i| (dot(a.row(i), x) - b[i]).powi(2)).sum::<f64>().sqrt()
}

fn error_ratio(err: f64, err_std: f64) -> f64 {
    if err_std > 0.0 {
        err / err_std
    } else if err == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

fn validate(parameter: f64, method: Method, opts: &RunOptions) -> Result<(), BenchError> {
    if !(opts.init_fraction > 0.0 && opts.init_fraction < 1.0) {
        return Err(BenchError::InvalidParameter(format!("init_fraction = {} outside (0, 1)", opts.init_fraction)));
    }
    if opts.repeats == 0 {
        return Err(BenchError::InvalidParameter("repeats must be positive".into()));
    }
    if method.takes_parameter() && !(parameter > 0.0 && parameter <= 1.0) {
        return Err(BenchError::InvalidParameter(format!("{method} parameter {parameter} outside (0, 1]")));
    }
    Ok(())
}

fn init_rows(n: usize, d: usize, init_fraction: f64) -> Result<usize, BenchError> {
    let n_init = (init_fraction * n as f64).ceil() as usize;
    if n_init < d + 1 || n_init >= n {
        return Err(BenchError::InvalidParameter(format!(
            "{n} rows with init fraction {init_fraction} give {n_init} initial rows; need between d+1 = {} and {}",
            d + 1,
            n - 1
        )));
    }
    Ok(n_init)
}

/// One pass over the stream. Returns the final solution and rows kept.
fn stream_once(data: &Dataset, cell: BenchCell, opts: &RunOptions, timeline: &mut Timeline) -> Result<(DenseVector, usize), BenchError> {
    let (n, d) = (data.rows(), data.d());
    let n_init = init_rows(n, d, opts.init_fraction)?;
    let mut solver = timeline.time(Section::Init, || {
        let (a0, b0) = compress_initial_block(&data.a.row_block(0, n_init), &data.b[..n_init])?;
        Solver::build(cell.method, cell.parameter, &a0, &b0, n - n_init, opts, Mode::Oblivious)
    })?;
    timeline.time(Section::Update, || -> Result<(), BenchError> {
        for i in n_init..n {
            solver.insert(data.a.row(i), data.b[i])?;
        }
        Ok(())
    })?;
    Ok((solver.solution(), solver.rows_sampled(d + 1)))
}

fn oracle_residual(a: &DenseMatrix, b: &[f64]) -> Result<f64, BenchError> {
    let x = normal_equation_solve(a, b)?;
    Ok(residual_norm(a, b, &x))
}

/// Single run of one cell with its full timeline. `wall_time_s` is the
/// update loop only.
pub fn run_experiment_traced(data: &Dataset, method: Method, parameter: f64, opts: &RunOptions) -> Result<(BenchRecord, Timeline), BenchError> {
    let cell = BenchCell::new(method, parameter);
    validate(cell.parameter, method, opts)?;
    let mut timeline = Timeline::new();
    let (x, rows_sampled) = stream_once(data, cell, opts, &mut timeline)?;
    let (err, err_std) = timeline.time(Section::Oracle, || -> Result<(f64, f64), BenchError> {
        Ok((residual_norm(&data.a, &data.b, &x), oracle_residual(&data.a, &data.b)?))
    })?;
    timeline.check_disjoint()?;
    let record = BenchRecord {
        dataset: data.name.clone(),
        method,
        parameter: cell.parameter,
        error_ratio: error_ratio(err, err_std),
        wall_time_s: timeline.total(Section::Update).as_secs_f64(),
        rows_sampled,
        seed: opts.seed,
    };
    Ok((record, timeline))
}

fn run_cell(data: &Dataset, cell: BenchCell, opts: &RunOptions, err_std: f64) -> Result<BenchRecord, BenchError> {
    validate(cell.parameter, cell.method, opts)?;
    let mut times = Vec::with_capacity(opts.repeats);
    let mut first = None;
    for _ in 0..opts.repeats {
        let mut timeline = Timeline::new();
        let (x, rows) = stream_once(data, cell, opts, &mut timeline)?;
        timeline.check_disjoint()?;
        times.push(timeline.total(Section::Update).as_secs_f64());
        first.get_or_insert((x, rows));
    }
    let (x, rows_sampled) = first.expect("at least one repeat");
    Ok(BenchRecord {
        dataset: data.name.clone(),
        method: cell.method,
        parameter: cell.parameter,
        error_ratio: error_ratio(residual_norm(&data.a, &data.b, &x), err_std),
        wall_time_s: median(&times),
        rows_sampled,
        seed: opts.seed,
    })
}

/// Runs one cell `opts.repeats` times and reports the median update time.
pub fn run_experiment(data: &Dataset, method: Method, parameter: f64, opts: &RunOptions) -> Result<BenchRecord, BenchError> {
    let err_std = oracle_residual(&data.a, &data.b)?;
    run_cell(data, BenchCell::new(method, parameter), opts, err_std)
}

/// Runs every cell on the same data, `jobs` cells at a time. Concurrent
/// cells compete for cores, so use `jobs = 1` when timings matter.
pub fn run_sweep(data: &Dataset, cells: &[BenchCell], opts: &RunOptions, jobs: usize) -> Result<Vec<BenchRecord>, BenchError> {
    let pool = pool(jobs)?;
    for c in cells {
        validate(c.parameter, c.method, opts)?;
    }
    let err_std = oracle_residual(&data.a, &data.b)?;
    pool.install(|| cells.par_iter().map(|&c| run_cell(data, c, opts, err_std)).collect())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, BenchError> {
    if jobs == 0 {
        return Err(BenchError::InvalidParameter("jobs must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::InvalidParameter(format!("thread pool: {e}")))
}

/// [`run_adaptive`] for every cell, `jobs` cells at a time. Each cell
/// faces its own adversary with the same seed.
pub fn run_adaptive_sweep(
    dataset: &str,
    rows: usize,
    d: usize,
    noise_std: f64,
    cells: &[BenchCell],
    opts: &RunOptions,
    jobs: usize,
) -> Result<Vec<BenchRecord>, BenchError> {
    let pool = pool(jobs)?;
    pool.install(|| cells.par_iter().map(|c| run_adaptive(dataset, rows, d, noise_std, c.method, c.parameter, opts)).collect())
}

/// Streams `rows` rows from a [`ResidualAdversary`] that reacts to the
/// method's published solution after every insertion. Row generation is
/// timed separately from the updates.
pub fn run_adaptive(
    dataset: &str,
    rows: usize,
    d: usize,
    noise_std: f64,
    method: Method,
    parameter: f64,
    opts: &RunOptions,
) -> Result<BenchRecord, BenchError> {
    let cell = BenchCell::new(method, parameter);
    validate(cell.parameter, method, opts)?;
    let n_init = init_rows(rows, d, opts.init_fraction)?;
    let mut times = Vec::with_capacity(opts.repeats);
    let mut outcome = None;
    for _ in 0..opts.repeats {
        let mut timeline = Timeline::new();
        let mut adv = ResidualAdversary::new(rows - n_init, d, noise_std, opts.seed);
        let (a_init, b_init) = timeline.time(Section::Generate, || adv.initial_block(n_init));
        let mut solver = timeline.time(Section::Init, || {
            let (a0, b0) = compress_initial_block(&a_init, &b_init)?;
            Solver::build(method, cell.parameter, &a0, &b0, rows - n_init, opts, Mode::Adaptive)
        })?;
        let mut a_all = a_init;
        let mut b_all = b_init.into_vec();
        let mut x = solver.solution();
        loop {
            let next = timeline.time(Section::Generate, || adv.next_row(&x));
            let Some((a, beta)) = next else { break };
            timeline.time(Section::Update, || -> Result<(), BenchError> {
                solver.insert(&a, beta)?;
                x = solver.solution();
                Ok(())
            })?;
            a_all.push_row(&a)?;
            b_all.push(beta);
        }
        timeline.check_disjoint()?;
        times.push(timeline.total(Section::Update).as_secs_f64());
        outcome.get_or_insert((a_all, b_all, x, solver.rows_sampled(d + 1)));
    }
    let (a_all, b_all, x, rows_sampled) = outcome.expect("at least one repeat");
    let err_std = oracle_residual(&a_all, &b_all)?;
    Ok(BenchRecord {
        dataset: dataset.to_string(),
        method,
        parameter: cell.parameter,
        error_ratio: error_ratio(residual_norm(&a_all, &b_all, &x), err_std),
        wall_time_s: median(&times),
        rows_sampled,
        seed: opts.seed,
    })
}
