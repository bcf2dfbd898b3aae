//! Matrix Market coordinate I/O and plain-text vector files.
//!
//! Export always writes `general` with sorted 1-based entries, even for
//! symmetric matrices. Import accepts `general` and `symmetric` (the lower
//! or upper triangle is mirrored).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Serialize to Matrix Market coordinate/real/general, 1-based, row-major.
pub fn write_matrix_market(m: &CsrMatrix) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.n_rows, m.n_cols, m.nnz());
    for i in 0..m.n_rows {
        for (j, v) in m.row(i) {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
        }
    }
    out
}

/// Parse Matrix Market coordinate format.
pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate();

    let (lineno, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let header_fields: Vec<&str> = header.split_whitespace().collect();
    if header_fields.len() < 5
        || !header_fields[0].starts_with("%%MatrixMarket")
        || header_fields[1] != "matrix"
        || header_fields[2] != "coordinate"
    {
        return Err(Error::Parse {
            line: lineno + 1,
            msg: "expected '%%MatrixMarket matrix coordinate real <symmetry>' header".into(),
        });
    }
    if header_fields[3] != "real" && header_fields[3] != "integer" {
        return Err(Error::Parse {
            line: lineno + 1,
            msg: format!("unsupported field type '{}'", header_fields[3]),
        });
    }
    let symmetric = match header_fields[4] {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("unsupported symmetry '{other}'"),
            })
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut raw_entries = 0usize;
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| Error::Parse { line: lineno + 1, msg };
        if size.is_none() {
            if fields.len() != 3 {
                return Err(err("expected 'rows cols nnz' size line".into()));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| err(format!("bad size value '{s}'")))
            };
            size = Some((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
            continue;
        }
        if fields.len() != 3 {
            return Err(err("expected 'row col value' entry".into()));
        }
        let (n_rows, n_cols, _) = size.unwrap();
        let i: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad row index '{}'", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad column index '{}'", fields[1])))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad value '{}'", fields[2])))?;
        if i < 1 || i > n_rows || j < 1 || j > n_cols {
            return Err(err(format!("entry ({i}, {j}) outside {n_rows}x{n_cols}")));
        }
        raw_entries += 1;
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }

    let (n_rows, n_cols, nnz) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    if raw_entries != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("declared {nnz} entries, found {raw_entries}"),
        });
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
}

pub fn write_matrix_market_file(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(path.as_ref(), write_matrix_market(m).as_bytes())
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    parse_matrix_market(&text)
}

/// Serialize a vector, one value per line.
pub fn write_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        let _ = writeln!(out, "{x}");
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad vector value '{}'", l.trim()),
            })
        })
        .collect()
}

pub fn write_vector_file(v: &[f64], path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(path.as_ref(), write_vector(v).as_bytes())
}

pub fn read_vector_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    parse_vector(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 2, -1.5), (1, 1, 4.0), (2, 0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_general() {
        let m = example();
        let text = write_matrix_market(&m);
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n"));
        let m2 = parse_matrix_market(&text).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn symmetric_is_mirrored() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2\n2 1 -1\n3 3 5\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn rejects_bad_header_and_entries() {
        assert!(parse_matrix_market("nonsense\n1 1 0\n").is_err());
        assert!(
            parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n")
                .is_err()
        );
        assert!(
            parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n")
                .is_err()
        );
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![1.5, -2.0, 0.0, 3.25e-3];
        assert_eq!(parse_vector(&write_vector(&v)).unwrap(), v);
    }
}
