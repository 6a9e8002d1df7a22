//! The dense matrix text format shared by the CLI and the API.
//!
//! ```text
//! 3
//! 1.0 0.5 0.0
//! 0.5 1.0 0.25
//! 0.0 0.25 1.0
//! ```
//!
//! The first line holds `N`; then `N` lines of `N` whitespace-separated
//! numbers, row-major. Values are written in Rust's shortest round-trip
//! form (`{:?}`), so parsing a written matrix gives back identical bits.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixFormatError {
    #[error("missing size header")]
    MissingHeader,
    #[error("bad size header {0:?}")]
    BadHeader(String),
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("row {row}: expected {expected} values, found {found}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {col}: bad value {text:?}")]
    BadValue { row: usize, col: usize, text: String },
}

/// Largest accepted `N`; keeps a hostile header from forcing a huge
/// allocation.
pub const MAX_MATRIX_N: usize = 100_000;

pub fn write_matrix(n: usize, values: &[f64]) -> String {
    assert_eq!(values.len(), n * n, "matrix must be n×n");
    let mut out = format!("{n}\n");
    for row in values.chunks(n.max(1)).take(n) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the format above into `(N, row-major values)`. Blank lines are
/// ignored.
pub fn parse_matrix(text: &str) -> Result<(usize, Vec<f64>), MatrixFormatError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or(MatrixFormatError::MissingHeader)?;
    let n: usize = header
        .parse()
        .ok()
        .filter(|n| *n <= MAX_MATRIX_N)
        .ok_or_else(|| MatrixFormatError::BadHeader(header.to_string()))?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (row, line) in lines.enumerate() {
        if row >= n {
            return Err(MatrixFormatError::RowCount {
                expected: n,
                found: row + 1,
            });
        }
        let before = values.len();
        for (col, cell) in line.split_whitespace().enumerate() {
            let v: f64 = cell.parse().map_err(|_| MatrixFormatError::BadValue {
                row,
                col,
                text: cell.to_string(),
            })?;
            values.push(v);
            if values.len() - before > n {
                break;
            }
        }
        let found = values.len() - before;
        if found != n {
            return Err(MatrixFormatError::RowLength {
                row,
                expected: n,
                found: line.split_whitespace().count(),
            });
        }
        rows += 1;
    }
    if rows != n {
        return Err(MatrixFormatError::RowCount {
            expected: n,
            found: rows,
        });
    }
    Ok((n, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let values = vec![1.0, 0.1 + 0.2, 1e-300, -0.0];
        let text = write_matrix(2, &values);
        assert_eq!(text, "2\n1.0 0.30000000000000004\n1e-300 -0.0\n");
        let (n, back) = parse_matrix(&text).unwrap();
        assert_eq!(n, 2);
        assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(parse_matrix("0\n").unwrap(), (0, vec![]));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_matrix(""), Err(MatrixFormatError::MissingHeader));
        assert!(matches!(parse_matrix("x"), Err(MatrixFormatError::BadHeader(_))));
        assert!(matches!(parse_matrix("2\n1 2\n"), Err(MatrixFormatError::RowCount { .. })));
        assert!(matches!(parse_matrix("2\n1 2 3\n4 5\n"), Err(MatrixFormatError::RowLength { .. })));
        assert!(matches!(parse_matrix("1\nabc\n"), Err(MatrixFormatError::BadValue { .. })));
        assert!(matches!(parse_matrix("1\n1\n2\n"), Err(MatrixFormatError::RowCount { .. })));
    }
}
