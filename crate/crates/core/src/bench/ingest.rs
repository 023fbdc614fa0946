use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::matcore::{DenseMatrix, DenseVector};

use super::BenchError;

/// Location of a bad cell. `row` is the 1-based line in the file and
/// `column` the 1-based field; column 0 means the whole row.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("row {row}, column {column}: {message}")]
pub struct ParseError {
    pub row: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(row: usize, column: usize, message: impl Into<String>) -> Self {
        Self { row, column, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    /// Column with this header name. Requires a header row.
    Named(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(if s == "last" { LabelColumn::Last } else { LabelColumn::Named(s.to_string()) })
    }
}

/// Reads a numeric CSV into features and labels. The first row is taken
/// as a header when none of its cells parse as a number.
pub fn ingest_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<(DenseMatrix, DenseVector), BenchError> {
    let file = File::open(path)?;
    ingest_csv_reader(file, label)
}

pub fn ingest_csv_reader<R: Read>(input: R, label: &LabelColumn) -> Result<(DenseMatrix, DenseVector), BenchError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            ParseError::new(line, 0, e.to_string())
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if i == 0 && rec.iter().all(|c| c.parse::<f64>().is_err()) {
            header = Some(rec.iter().map(str::to_string).collect());
            width = Some(rec.len());
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(ParseError::new(line, w.min(rec.len()) + 1, format!("expected {w} fields, found {}", rec.len())).into());
        }
        for (j, cell) in rec.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(ParseError::new(line, j + 1, format!("`{cell}` is not a finite number")).into()),
            }
        }
        rows += 1;
    }
    if rows == 0 {
        let msg = if header.is_some() { "no data rows after the header" } else { "empty file" };
        return Err(ParseError::new(1, 0, msg).into());
    }
    let w = width.expect("set with the first row");
    if w < 2 {
        return Err(ParseError::new(1, 0, "need at least one feature and one label column").into());
    }
    let label_idx = match label {
        LabelColumn::Last => w - 1,
        LabelColumn::Named(name) => {
            let h = header.as_ref().ok_or_else(|| ParseError::new(1, 0, format!("label column `{name}` needs a header row")))?;
            h.iter().position(|c| c == name).ok_or_else(|| ParseError::new(1, 0, format!("no column named `{name}`")))?
        }
    };
    let mut a = DenseMatrix::zeros(rows, w - 1);
    let mut b = DenseVector::zeros(rows);
    for r in 0..rows {
        let src = &values[r * w..(r + 1) * w];
        let dst = a.row_mut(r);
        let mut k = 0;
        for (j, &v) in src.iter().enumerate() {
            if j == label_idx {
                b[r] = v;
            } else {
                dst[k] = v;
                k += 1;
            }
        }
    }
    Ok((a, b))
}
