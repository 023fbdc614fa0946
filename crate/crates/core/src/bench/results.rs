use std::cmp::Ordering;

use super::ingest::ParseError;
use super::{BenchError, Method};

pub const RESULTS_HEADER: [&str; 7] =
    ["dataset", "method", "parameter", "error_ratio", "wall_time_s", "rows_sampled", "seed"];

/// One benchmark cell. `parameter` is `ε` for the leverage methods, `p`
/// for uniform sampling and 0 for Kalman.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub dataset: String,
    pub method: Method,
    pub parameter: f64,
    /// Final residual divided by the residual of the static normal equation.
    pub error_ratio: f64,
    pub wall_time_s: f64,
    /// Streamed rows kept by the method (initial block excluded).
    pub rows_sampled: usize,
    pub seed: u64,
}

fn record_order(a: &BenchRecord, b: &BenchRecord) -> Ordering {
    a.dataset
        .cmp(&b.dataset)
        .then(a.method.cmp(&b.method))
        .then(a.parameter.total_cmp(&b.parameter))
        .then(a.seed.cmp(&b.seed))
        .then(a.error_ratio.total_cmp(&b.error_ratio))
        .then(a.wall_time_s.total_cmp(&b.wall_time_s))
        .then(a.rows_sampled.cmp(&b.rows_sampled))
}

/// `x` with 6 significant digits, plain for exponents in `[-5, 6)` and
/// scientific otherwise.
pub(crate) fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        trim_zeros(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sorted(records: &[BenchRecord]) -> Vec<&BenchRecord> {
    let mut v: Vec<&BenchRecord> = records.iter().collect();
    v.sort_by(|a, b| record_order(a, b));
    v
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Results table, sorted by dataset, method and parameter.
pub fn emit_results(records: &[BenchRecord]) -> String {
    write_csv(
        &RESULTS_HEADER,
        sorted(records).into_iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.method.name().to_string(),
                sig6(r.parameter),
                sig6(r.error_ratio),
                sig6(r.wall_time_s),
                r.rows_sampled.to_string(),
                r.seed.to_string(),
            ]
        }),
    )
}

/// Plot data: wall time against relative error `error_ratio − 1`.
pub fn emit_plot_data(records: &[BenchRecord]) -> String {
    write_csv(
        &["dataset", "method", "parameter", "wall_time_s", "relative_error"],
        sorted(records).into_iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.method.name().to_string(),
                sig6(r.parameter),
                sig6(r.wall_time_s),
                sig6(r.error_ratio - 1.0),
            ]
        }),
    )
}

/// Reads back a table written by [`emit_results`].
pub fn parse_results(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| ParseError { row: 1, column: 0, message: e.to_string() })?;
    if header.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(ParseError { row: 1, column: 0, message: "unexpected header".into() }.into());
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| ParseError { row, column: 0, message: e.to_string() })?;
        let cell_err = |column: usize| ParseError { row, column, message: format!("bad value `{}`", &rec[column - 1]) };
        let real = |column: usize| rec[column - 1].parse::<f64>().map_err(|_| cell_err(column));
        out.push(BenchRecord {
            dataset: rec[0].to_string(),
            method: rec[1].parse().map_err(|_| cell_err(2))?,
            parameter: real(3)?,
            error_ratio: real(4)?,
            wall_time_s: real(5)?,
            rows_sampled: rec[5].parse().map_err(|_| cell_err(6))?,
            seed: rec[6].parse().map_err(|_| cell_err(7))?,
        });
    }
    Ok(out)
}
