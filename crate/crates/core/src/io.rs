//! Plain-text matrix format.
//!
//! ```text
//! # comment lines start with '#'
//! 2                      <- number of qubits N
//! re im re im ...        <- d = 2^N rows, each with d complex entries
//! ```
//!
//! Blank lines and `#` comments are ignored anywhere.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, C64, DENSE_LIMIT};

/// Data lines of a text block, with comments stripped.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((k + 1, line))
    })
}

pub(crate) fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: cannot read number {tok:?}")))
}

/// Parses the matrix format into a dense operator. No unitarity check.
pub fn parse_matrix(text: &str) -> Result<DenseOperator> {
    let mut lines = data_lines(text);
    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("line {ln}: expected qubit count, found {header:?}")))?;
    if n > DENSE_LIMIT {
        return Err(Error::SizeLimit {
            what: "matrix file",
            n,
            limit: DENSE_LIMIT,
        });
    }
    let d = 1usize << n;
    let mut m = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for row in 0..d {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {d} rows, found {row}")))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 * d {
            return Err(Error::Parse(format!(
                "line {ln}: expected {} numbers, found {}",
                2 * d,
                toks.len()
            )));
        }
        for col in 0..d {
            m[(row, col)] = C64::new(parse_f64(toks[2 * col], ln)?, parse_f64(toks[2 * col + 1], ln)?);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse(format!("line {ln}: trailing data after matrix")));
    }
    DenseOperator::new(n, m)
}

/// Formats with 17 significant digits, so parsing recovers the exact values.
pub fn matrix_to_text(o: &DenseOperator) -> String {
    let m = o.matrix();
    let mut s = format!("{}\n", o.n_qubits());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:.17e} {:.17e}", m[(r, c)].re, m[(r, c)].im))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_matrix_file(path: &Path) -> Result<DenseOperator> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix_file(path: &Path, o: &DenseOperator) -> Result<()> {
    std::fs::write(path, matrix_to_text(o))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::haar_random_qubits;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_random_qubits(2, &mut rng).unwrap();
        let back = parse_matrix(&matrix_to_text(&u)).unwrap();
        assert_eq!(back.matrix(), u.matrix());
    }

    #[test]
    fn comments_and_errors() {
        let text = "# swap\n1\n0 0  1 0 # row 0\n\n1 0 0 0\n";
        let x = parse_matrix(text).unwrap();
        assert_eq!(x.matrix()[(0, 1)], C64::new(1.0, 0.0));
        assert!(matches!(parse_matrix("1\n0 0 1 0\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("1\n0 0 1\n1 0 0 0\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("1\n0 0 1 0\n1 0 0 0\n5\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix(""), Err(Error::Parse(_))));
    }
}
