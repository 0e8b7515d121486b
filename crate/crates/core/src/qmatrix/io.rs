//! Plain-text matrix format: a line holding `d`, then `d*d` lines of
//! `re im` in row-major order, each number printed with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::dense::{ComplexMatrix, MAX_DIM};
use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix(m: &ComplexMatrix, out: &mut String) {
    debug_assert!(m.is_square());
    let _ = writeln!(out, "{}", m.rows());
    for z in m.data() {
        let _ = writeln!(out, "{} {}", fmt_f64(z.re), fmt_f64(z.im));
    }
}

pub fn matrix_to_string(m: &ComplexMatrix) -> String {
    let mut s = String::new();
    write_matrix(m, &mut s);
    s
}

pub(crate) fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {tok:?}")))
}

/// Reads one matrix from `lines`, advancing past it. `line_no` tracks the
/// 1-based position for diagnostics.
pub(crate) fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<ComplexMatrix> {
    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("missing dimension line".into()))?;
    let d: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {ln}: bad dimension {header:?}")))?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::Size(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    let mut data = Vec::with_capacity(d * d);
    for k in 0..d * d {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {} entries, found {k}", d * d)))?;
        let mut toks = line.split_whitespace();
        let (re, im) = match (toks.next(), toks.next(), toks.next()) {
            (Some(re), Some(im), None) => (parse_f64(re, ln)?, parse_f64(im, ln)?),
            _ => return Err(Error::Parse(format!("line {ln}: expected `re im`, got {line:?}"))),
        };
        data.push(Complex64::new(re, im));
    }
    ComplexMatrix::from_vec(d, d, data)
}

/// Numbered, non-blank lines.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn matrix_from_str(text: &str) -> Result<ComplexMatrix> {
    let mut lines = content_lines(text);
    let m = read_matrix(&mut lines)?;
    if let Some((ln, extra)) = lines.next() {
        return Err(Error::Parse(format!("line {ln}: trailing content {extra:?}")));
    }
    Ok(m)
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    matrix_from_str(&std::fs::read_to_string(path)?)
}

pub fn save_matrix(m: &ComplexMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, matrix_to_string(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let m = ComplexMatrix::from_real_diagonal(&[0.5, 0.5]);
        let s = matrix_to_string(&m);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "2");
        assert_eq!(lines[1], "5.0000000000000000e-1 0.0000000000000000e0");
    }

    #[test]
    fn rejects_truncated_and_trailing() {
        assert!(matrix_from_str("2\n1 0\n0 0\n0 0\n").is_err());
        assert!(matrix_from_str("1\n1 0\n7\n").is_err());
        assert!(matrix_from_str("1\n1 0 3\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(entries in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 9)) {
            let data = entries.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let m = ComplexMatrix::from_vec(3, 3, data).unwrap();
            let back = matrix_from_str(&matrix_to_string(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
