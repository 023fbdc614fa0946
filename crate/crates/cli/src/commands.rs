use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use dlsr::bench::{
    elliptical_generate, emit_plot_data, emit_results, ingest_csv, run_adaptive_sweep, run_sweep, BenchCell, BenchRecord, Dataset,
    EllipticalConfig, Method, RunOptions, DEFAULT_INIT_FRACTION,
};
use dlsr::reductions::{Construction, MAX_DIM, MAX_QUERIES};

use crate::args::{Adversary, CsvArgs, MethodArgs, SyntheticArgs, VerifyArgs};

/// Bad flag values caught before any work starts. Exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn check_unit_interval(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(usage(format!("--{name} needs at least one value")));
    }
    match values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        Some(v) => Err(usage(format!("--{name} value {v} outside (0, 1]"))),
        None => Ok(()),
    }
}

impl MethodArgs {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(usage("--methods needs at least one method"));
        }
        if self.methods.iter().any(|m| matches!(m, Method::Ours | Method::RowSampling)) {
            check_unit_interval("epsilon", &self.epsilon)?;
        }
        if self.methods.contains(&Method::Uniform) {
            check_unit_interval("params", &self.params)?;
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(usage(format!("--delta {} outside (0, 1)", self.delta)));
        }
        if self.repeats == 0 {
            return Err(usage("--repeats must be positive"));
        }
        if self.jobs == 0 {
            return Err(usage("--jobs must be positive"));
        }
        for path in [&self.out, &self.plot_out].into_iter().flatten() {
            if path.is_dir() {
                return Err(usage(format!("{} is a directory", path.display())));
            }
        }
        Ok(())
    }

    /// One cell per (method, parameter), methods deduplicated.
    fn cells(&self) -> Vec<BenchCell> {
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        let mut cells = Vec::new();
        for m in methods {
            let params: &[f64] = match m {
                Method::Kalman => &[0.0],
                Method::Ours | Method::RowSampling => &self.epsilon,
                Method::Uniform => &self.params,
            };
            cells.extend(params.iter().map(|&p| BenchCell::new(m, p)));
        }
        cells
    }

    fn options(&self) -> RunOptions {
        RunOptions { delta: self.delta, seed: self.seed, repeats: self.repeats, ..RunOptions::default() }
    }

    fn emit(&self, mut records: Vec<BenchRecord>) -> Result<()> {
        if self.omit_timing {
            for r in &mut records {
                r.wall_time_s = 0.0;
            }
        }
        let results = emit_results(&records);
        match &self.out {
            Some(path) => write_atomic(path, &results)?,
            None => std::io::stdout().write_all(results.as_bytes())?,
        }
        if let Some(path) = &self.plot_out {
            write_atomic(path, &emit_plot_data(&records))?;
        }
        Ok(())
    }
}

/// Writes through a temporary file in the target directory, so a failed
/// run never leaves a partial file behind.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn check_init_block(rows: usize, d: usize) -> Result<()> {
    let n_init = (DEFAULT_INIT_FRACTION * rows as f64).ceil() as usize;
    if d == 0 {
        return Err(usage("--d must be positive"));
    }
    if n_init < d + 1 || n_init >= rows {
        return Err(usage(format!(
            "--T {rows} is too small for --d {d}: the first {n_init} rows initialize the solvers and must number at least d+1 = {}",
            d + 1
        )));
    }
    Ok(())
}

pub fn bench_synthetic(args: &SyntheticArgs) -> Result<()> {
    let common = &args.common;
    common.validate()?;
    check_init_block(args.t, args.d)?;
    if !(args.noise_std >= 0.0 && args.noise_std.is_finite()) {
        return Err(usage(format!("--noise-std {} must be finite and non-negative", args.noise_std)));
    }
    if !(0.0..=1.0).contains(&args.heavy_fraction) {
        return Err(usage(format!("--heavy-fraction {} outside [0, 1]", args.heavy_fraction)));
    }
    let cells = common.cells();
    let opts = common.options();
    let records = match args.adversary {
        Adversary::Oblivious => {
            let mut cfg = EllipticalConfig::new(args.t, args.d, common.seed);
            cfg.noise_std = args.noise_std;
            cfg.heavy_fraction = args.heavy_fraction;
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let (a, b) = elliptical_generate(&cfg)?;
            run_sweep(&Dataset::new("synthetic", a, b), &cells, &opts, common.jobs)?
        }
        Adversary::Adaptive => run_adaptive_sweep("adaptive", args.t, args.d, args.noise_std, &cells, &opts, common.jobs)?,
    };
    common.emit(records)
}

pub fn bench_csv(args: &CsvArgs) -> Result<()> {
    let common = &args.common;
    common.validate()?;
    let (a, b) = ingest_csv(&args.csv, &args.label_column).with_context(|| format!("reading {}", args.csv.display()))?;
    let name = args.csv.file_stem().map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let data = Dataset::new(name, a, b);
    let records = run_sweep(&data, &common.cells(), &common.options(), common.jobs)?;
    common.emit(records)
}

/// Prints one line per run. Returns whether every run passed.
pub fn verify_reductions(args: &VerifyArgs) -> Result<bool> {
    if args.queries == 0 || args.queries > MAX_QUERIES {
        return Err(usage(format!("--queries {} outside [1, {MAX_QUERIES}]", args.queries)));
    }
    if let Some(&d) = args.d.iter().find(|&&d| d == 0 || d > MAX_DIM) {
        return Err(usage(format!("--d {d} outside [1, {MAX_DIM}]")));
    }
    let constructions: Vec<Construction> = match args.construction {
        Some(c) => vec![c],
        None => Construction::ALL.to_vec(),
    };
    let mut all_passed = true;
    let mut out = std::io::stdout().lock();
    for c in constructions {
        let dims = if args.d.is_empty() { vec![c.default_dim()] } else { args.d.clone() };
        for d in dims {
            let report = c.run(d, args.queries, args.seed).with_context(|| format!("{c} at d = {d}"))?;
            all_passed &= report.passed;
            writeln!(out, "{report}")?;
        }
    }
    Ok(all_passed)
}
