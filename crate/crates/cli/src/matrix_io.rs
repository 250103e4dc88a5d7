//! Plain-text complex matrices: one row per line, each entry written as a
//! whitespace-separated `re im` pair. Blank lines and lines starting with `#`
//! are skipped.

use std::fmt::Write as _;
use std::path::Path;

use qsplit_core::{CMatrix, C64};

use crate::error::{CliError, Result};

pub fn parse_matrix(text: &str, path: &Path) -> Result<CMatrix> {
    let err = |line: usize, message: String| CliError::Matrix {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut first_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if rows.is_empty() {
            first_line = k + 1;
        }
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| err(k + 1, format!("`{tok}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() % 2 != 0 {
            return Err(err(k + 1, format!("{} numbers do not form re/im pairs", values.len())));
        }
        let row: Vec<C64> = values.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(err(
                    k + 1,
                    format!("row has {} entries, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(err(1, "no matrix rows".into()));
    }
    if rows[0].len() != n {
        return Err(err(
            first_line,
            format!("matrix is {}x{}, expected square", n, rows[0].len()),
        ));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.17e} {:.17e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
