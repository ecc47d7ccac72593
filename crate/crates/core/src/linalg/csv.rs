//! Plain CSV for matrices and vectors: one matrix row per line, no header.
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle reproduces every bit.

use super::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

pub(crate) fn format_value(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn parse_value(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad number {s:?}: {e}"),
    })
}

pub(crate) fn format_row(values: &[f64]) -> String {
    values.iter().map(|&v| format_value(v)).collect::<Vec<_>>().join(",")
}

pub(crate) fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',').map(|s| parse_value(s, lineno)).collect()
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        out.push_str(&format_row(m.row(i)));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(line, i + 1)?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    let n = rows.len();
    DenseMatrix::from_row_major(n, cols, rows.into_iter().flatten().collect())
}

/// Vectors are stored as a single column.
pub fn vector_to_csv(v: &DenseVector) -> String {
    v.iter().map(|&x| format_value(x) + "\n").collect()
}

pub fn vector_from_csv(text: &str) -> Result<DenseVector> {
    let m = matrix_from_csv(text)?;
    if m.cols() > 1 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("vector file has {} columns", m.cols()),
        });
    }
    DenseVector::new(m.as_slice().to_vec())
}
