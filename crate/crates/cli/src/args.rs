use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlsr::bench::{LabelColumn, Method};
use dlsr::reductions::Construction;

#[derive(Debug, Parser)]
#[command(name = "dlsr", version, about = "Dynamic least-squares benchmarks and reduction checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Benchmark the solvers on a synthetic elliptical stream.
    BenchSynthetic(SyntheticArgs),
    /// Benchmark the solvers on rows read from a CSV file.
    BenchCsv(CsvArgs),
    /// Run the lower-bound constructions and print a pass/fail table.
    VerifyReductions(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Adversary {
    /// Rows drawn in advance.
    Oblivious,
    /// Rows aligned with the error of the solution published so far.
    Adaptive,
}

/// Flags shared by both benchmark commands.
#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Methods to run.
    #[arg(long, value_delimiter = ',', default_value = "kalman,ours,row-sampling,uniform", value_parser = parse_method)]
    pub methods: Vec<Method>,

    /// Error parameters for `ours` and `row-sampling`.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,1")]
    pub epsilon: Vec<f64>,

    /// Keep probabilities for `uniform`.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.5")]
    pub params: Vec<f64>,

    /// Failure probability passed to `ours`.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,

    /// Seed for data generation and every solver.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Runs per cell; the reported time is the median.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,

    /// Cells run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Results CSV. Printed to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Optional second CSV with wall time against relative error.
    #[arg(long)]
    pub plot_out: Option<PathBuf>,

    /// Write 0 for wall times so identical flags give identical files.
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    /// Number of rows.
    #[arg(long = "T")]
    pub t: usize,

    /// Number of features.
    #[arg(long)]
    pub d: usize,

    #[arg(long, value_enum, default_value_t = Adversary::Oblivious)]
    pub adversary: Adversary,

    /// Standard deviation of the label noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise_std: f64,

    /// Heavy rows as a fraction of d.
    #[arg(long, default_value_t = 0.1)]
    pub heavy_fraction: f64,

    #[command(flatten)]
    pub common: MethodArgs,
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// Input file: numeric columns, optional header row.
    #[arg(long)]
    pub csv: PathBuf,

    /// Label column: a header name or `last`.
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,

    #[command(flatten)]
    pub common: MethodArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Construction to check. All of them when absent.
    #[arg(long, value_parser = parse_construction)]
    pub construction: Option<Construction>,

    /// Dimensions. Each construction's default when absent.
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<usize>,

    /// Queries (or updates) per run.
    #[arg(long, default_value_t = 100)]
    pub queries: usize,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: dlsr::bench::BenchError| e.to_string())
}

fn parse_construction(s: &str) -> Result<Construction, String> {
    s.parse().map_err(|e: dlsr::reductions::ReductionError| {
        let names: Vec<&str> = Construction::ALL.iter().map(|c| c.name()).collect();
        format!("{e} (expected one of {})", names.join(", "))
    })
}
