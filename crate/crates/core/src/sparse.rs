//! Compressed Sparse Row matrix storage.
//!
//! Three arrays: `values` holds the nonzeros row-wise, `col_indices` the
//! column of each stored value, and `row_offsets` the position where each
//! row starts (`row_offsets[i]..row_offsets[i+1]` spans row `i`).

use crate::error::{Error, Result};

/// Sparse matrix in CSR form, 0-based indices, values in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Nonzero values, row-wise.
    pub values: Vec<f64>,
    /// Column index of each stored value.
    pub col_indices: Vec<usize>,
    /// Row start offsets, length `n_rows + 1`.
    pub row_offsets: Vec<usize>,
}

impl CsrMatrix {
    /// Build a CSR matrix from (row, col, value) triplets.
    ///
    /// Duplicate coordinates are summed in insertion order; entries that sum
    /// to zero are kept as structural nonzeros. Columns end up sorted and
    /// unique within each row.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("triplet ({r}, {c})")));
            }
        }

        // Stable sort keeps insertion order among duplicates, so the
        // summation order is deterministic.
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));

        let mut values = Vec::new();
        let mut col_indices = Vec::new();
        let mut row_counts = vec![0usize; n_rows];
        let mut last: Option<(usize, usize)> = None;
        for &i in &order {
            let (r, c, v) = triplets[i];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                values.push(v);
                col_indices.push(c);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }

        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        row_offsets.push(0);
        let mut acc = 0;
        for count in row_counts {
            acc += count;
            row_offsets.push(acc);
        }

        Ok(CsrMatrix {
            n_rows,
            n_cols,
            values,
            col_indices,
            row_offsets,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate the stored entries of one row as (col, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Stored value at (i, j), or 0.0 if the position is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Expand to a dense row-major matrix. Intended for small matrices and
    /// oracle checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                dense[i][j] = v;
            }
        }
        dense
    }

    /// Exact structural + bitwise value symmetry.
    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|i| {
            self.row(i)
                .all(|(j, v)| self.get(j, i).to_bits() == v.to_bits())
        })
    }

    /// Check the CSR structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.row_offsets.len() != self.n_rows + 1 {
            return Err(Error::DimensionMismatch(format!(
                "row_offsets length {} != n_rows + 1 = {}",
                self.row_offsets.len(),
                self.n_rows + 1
            )));
        }
        if self.row_offsets[0] != 0 || *self.row_offsets.last().unwrap() != self.nnz() {
            return Err(Error::DimensionMismatch(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if self.col_indices.len() != self.nnz() {
            return Err(Error::DimensionMismatch(
                "col_indices and values length mismatch".into(),
            ));
        }
        for w in self.row_offsets.windows(2) {
            if w[1] < w[0] {
                return Err(Error::DimensionMismatch("row_offsets not monotone".into()));
            }
        }
        for i in 0..self.n_rows {
            let cols = &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]];
            for w in cols.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} columns not strictly increasing"
                    )));
                }
            }
            if let Some(&c) = cols.last() {
                if c >= self.n_cols {
                    return Err(Error::IndexOutOfRange {
                        row: i,
                        col: c,
                        n_rows: self.n_rows,
                        n_cols: self.n_cols,
                    });
                }
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix values".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 5x5 worked example used throughout: rows hold
    /// [-5 1 . . .; . 8 7 . .; 2 . 10 . .; . 4 . 2 9; . . -3 . 7].
    pub fn example_triplets() -> Vec<(usize, usize, f64)> {
        vec![
            (0, 0, -5.0),
            (0, 1, 1.0),
            (1, 1, 8.0),
            (1, 2, 7.0),
            (2, 0, 2.0),
            (2, 2, 10.0),
            (3, 1, 4.0),
            (3, 3, 2.0),
            (3, 4, 9.0),
            (4, 2, -3.0),
            (4, 4, 7.0),
        ]
    }

    #[test]
    fn worked_example_arrays() {
        let m = CsrMatrix::from_triplets(5, 5, &example_triplets()).unwrap();
        assert_eq!(
            m.values,
            vec![-5.0, 1.0, 8.0, 7.0, 2.0, 10.0, 4.0, 2.0, 9.0, -3.0, 7.0]
        );
        assert_eq!(m.col_indices, vec![0, 1, 1, 2, 0, 2, 1, 3, 4, 2, 4]);
        assert_eq!(m.row_offsets, vec![0, 2, 4, 6, 9, 11]);
        m.validate().unwrap();
    }

    #[test]
    fn empty_triplets() {
        let m = CsrMatrix::from_triplets(3, 3, &[]).unwrap();
        assert!(m.values.is_empty());
        assert!(m.col_indices.is_empty());
        assert_eq!(m.row_offsets, vec![0, 0, 0, 0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.values, vec![3.0]);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn zero_sum_entry_is_structural() {
        let m = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, -1.0)]).unwrap();
        assert_eq!(m.values, vec![0.0]);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(CsrMatrix::from_triplets(2, 2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(CsrMatrix::from_triplets(1, 1, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn dense_round_trip() {
        let m = CsrMatrix::from_triplets(5, 5, &example_triplets()).unwrap();
        let d = m.to_dense();
        let mut back = Vec::new();
        for (i, row) in d.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    back.push((i, j, v));
                }
            }
        }
        let m2 = CsrMatrix::from_triplets(5, 5, &back).unwrap();
        assert_eq!(m, m2);
    }
}
