use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matcore::{dot, eig_sym, norm, DenseMatrix, DenseVector};
use crate::rng::{gaussian_vector, stream_rng, unit_vector, StreamRng};

use super::BenchError;

/// Synthetic stream `a = w·Σ·z`, `b = ⟨a, x⋆⟩ + w·σ·ξ` with `z ~ N(0, I)`
/// and `ξ ~ N(0, 1)`. A few rows shortly after the initial segment get a
/// large `w` so the leverage profile is far from uniform.
#[derive(Clone, Debug)]
pub struct EllipticalConfig {
    pub t: usize,
    pub d: usize,
    pub sigma: DenseMatrix,
    /// Heavy rows as a fraction of `d`; `0.1` gives `d/10` heavy rows.
    pub heavy_fraction: f64,
    pub heavy_scale: f64,
    pub x_star: DenseVector,
    pub noise_std: f64,
    pub seed: u64,
}

impl EllipticalConfig {
    /// `Σ = I`, `d/10` heavy rows of scale `√T`, unit noise and `x⋆` drawn
    /// from the seed.
    pub fn new(t: usize, d: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 4);
        Self {
            t,
            d,
            sigma: DenseMatrix::identity(d),
            heavy_fraction: 0.1,
            heavy_scale: (t as f64).sqrt(),
            x_star: gaussian_vector(d, &mut rng),
            noise_std: 1.0,
            seed,
        }
    }

    /// Number of heavy rows, `round(heavy_fraction · d)`.
    pub fn heavy_count(&self) -> usize {
        (self.heavy_fraction * self.d as f64).round() as usize
    }

    /// Index range `[T/10, T/5)` that heavy rows are drawn from.
    pub fn heavy_window(&self) -> std::ops::Range<usize> {
        self.t / 10..self.t / 5
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidParameter(m));
        if self.t == 0 || self.d == 0 {
            return bad(format!("need T, d > 0, got T = {}, d = {}", self.t, self.d));
        }
        if !(0.0..=1.0).contains(&self.heavy_fraction) {
            return bad(format!("heavy_fraction = {} outside [0, 1]", self.heavy_fraction));
        }
        if !(self.heavy_scale.is_finite() && self.heavy_scale > 0.0) {
            return bad(format!("heavy_scale = {} must be positive", self.heavy_scale));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std = {} must be non-negative", self.noise_std));
        }
        if self.x_star.len() != self.d {
            return bad(format!("x_star has {} entries, expected {}", self.x_star.len(), self.d));
        }
        if self.sigma.rows() != self.d || self.sigma.cols() != self.d {
            return bad(format!("sigma is {} x {}, expected {d} x {d}", self.sigma.rows(), self.sigma.cols(), d = self.d));
        }
        let eig = eig_sym(&self.sigma).map_err(|e| BenchError::InvalidParameter(format!("sigma: {e}")))?;
        let floor = -1e-12 * self.sigma.max_abs().max(1.0);
        if eig.values.iter().any(|&v| v < floor) {
            return bad("sigma is not positive semidefinite".into());
        }
        let window = self.heavy_window().len();
        if self.heavy_count() > window {
            return bad(format!("{} heavy rows do not fit in a window of {window} rows", self.heavy_count()));
        }
        Ok(())
    }

    /// Sorted indices of the heavy rows.
    pub fn heavy_indices(&self) -> Vec<usize> {
        let mut rng = stream_rng(self.seed, 3);
        let w = self.heavy_window();
        let mut idx: Vec<usize> = sample(&mut rng, w.len(), self.heavy_count()).into_iter().map(|i| w.start + i).collect();
        idx.sort_unstable();
        idx
    }
}

/// Draws the `T x d` design and the labels. Deterministic in `cfg.seed`.
pub fn elliptical_generate(cfg: &EllipticalConfig) -> Result<(DenseMatrix, DenseVector), BenchError> {
    cfg.validate()?;
    let (t, d) = (cfg.t, cfg.d);
    let mut w = vec![1.0; t];
    for i in cfg.heavy_indices() {
        w[i] = cfg.heavy_scale;
    }
    let identity = cfg.sigma == DenseMatrix::identity(d);
    let mut rng = stream_rng(cfg.seed, 5);
    let mut a = DenseMatrix::zeros(t, d);
    let mut b = DenseVector::zeros(t);
    for i in 0..t {
        let z = gaussian_vector(d, &mut rng);
        let row = a.row_mut(i);
        if identity {
            row.copy_from_slice(&z);
        } else {
            cfg.sigma.matvec_into(&z, row);
        }
        row.iter_mut().for_each(|v| *v *= w[i]);
        let xi: f64 = rng.sample(StandardNormal);
        b[i] = dot(a.row(i), &cfg.x_star) + w[i] * cfg.noise_std * xi;
    }
    Ok((a, b))
}

/// Isotropic Gaussian stream without heavy rows.
pub fn gaussian_stream(t: usize, d: usize, noise_std: f64, seed: u64) -> Result<(DenseMatrix, DenseVector), BenchError> {
    let mut cfg = EllipticalConfig::new(t, d, seed);
    cfg.heavy_fraction = 0.0;
    cfg.noise_std = noise_std;
    elliptical_generate(&cfg)
}

/// A stream whose next row may depend on the solution published so far.
pub trait RowSource {
    fn d(&self) -> usize;

    /// Next row given the current published solution, or `None` when exhausted.
    fn next_row(&mut self, published: &[f64]) -> Option<(DenseVector, f64)>;
}

/// Adaptive adversary. Each row is a Gaussian vector plus a component of
/// norm `gain·√d` along `x − x⋆`, where `x` is the published solution, so
/// the new row lands where the current answer is worst. Labels follow
/// `⟨a, x⋆⟩ + σ·ξ`.
#[derive(Clone, Debug)]
pub struct ResidualAdversary {
    d: usize,
    x_star: DenseVector,
    noise_std: f64,
    gain: f64,
    remaining: usize,
    rng: StreamRng,
}

impl ResidualAdversary {
    pub fn new(rows: usize, d: usize, noise_std: f64, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 4);
        let x_star = gaussian_vector(d, &mut rng);
        Self { d, x_star, noise_std, gain: 1.0, remaining: rows, rng: stream_rng(seed, 8) }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn x_star(&self) -> &DenseVector {
        &self.x_star
    }

    /// Rows `(d+1) x d` and labels for the initial block, drawn without
    /// adversarial alignment.
    pub fn initial_block(&mut self, rows: usize) -> (DenseMatrix, DenseVector) {
        let a = DenseMatrix::from_fn(rows, self.d, |_, _| self.rng.sample(StandardNormal));
        let b = (0..rows)
            .map(|i| dot(a.row(i), &self.x_star) + self.noise_std * self.rng.sample::<f64, _>(StandardNormal))
            .collect();
        (a, b)
    }
}

impl RowSource for ResidualAdversary {
    fn d(&self) -> usize {
        self.d
    }

    fn next_row(&mut self, published: &[f64]) -> Option<(DenseVector, f64)> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let mut dir: Vec<f64> = published.iter().zip(self.x_star.iter()).map(|(x, s)| x - s).collect();
        let r = norm(&dir);
        if r > 0.0 && r.is_finite() {
            dir.iter_mut().for_each(|v| *v /= r);
        } else {
            dir = unit_vector(self.d, &mut self.rng).into_vec();
        }
        let mut a = gaussian_vector(self.d, &mut self.rng);
        let s = self.gain * (self.d as f64).sqrt();
        for (ai, ui) in a.iter_mut().zip(&dir) {
            *ai += s * ui;
        }
        let xi: f64 = self.rng.sample(StandardNormal);
        let beta = dot(&a, &self.x_star) + self.noise_std * xi;
        Some((a, beta))
    }
}
