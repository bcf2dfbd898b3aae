//! Dense vector kernels and sparse matrix-vector product.
//!
//! All reductions use a fixed 4096-element chunking: each chunk is summed
//! sequentially, the per-chunk partials are combined in chunk order. The
//! result is therefore bitwise identical for any number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Chunk size of the deterministic reduction.
pub const REDUCTION_CHUNK: usize = 4096;

fn check_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// result[i] = alpha * x[i] + y[i]
pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(x, y)?;
    Ok(x
        .par_iter()
        .zip(y.par_iter())
        .map(|(&xi, &yi)| alpha * xi + yi)
        .collect())
}

/// Element-wise product result[i] = x[i] * y[i]
pub fn ewmul(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(x, y)?;
    Ok(x
        .par_iter()
        .zip(y.par_iter())
        .map(|(&xi, &yi)| xi * yi)
        .collect())
}

/// Dot product with the deterministic chunked reduction.
pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x, y)?;
    let partials: Vec<f64> = x
        .par_chunks(REDUCTION_CHUNK)
        .zip(y.par_chunks(REDUCTION_CHUNK))
        .map(|(cx, cy)| {
            let mut s = 0.0;
            for (xi, yi) in cx.iter().zip(cy) {
                s += xi * yi;
            }
            s
        })
        .collect();
    // Ordered sequential combine over chunk partials.
    Ok(partials.iter().sum())
}

/// Euclidean norm via the deterministic dot.
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).expect("same slice").sqrt()
}

/// y = A x over CSR rows; rows are independent and may run in parallel.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if a.n_cols != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, vector has length {}",
            a.n_cols,
            x.len()
        )));
    }
    Ok((0..a.n_rows)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for k in a.row_offsets[i]..a.row_offsets[i + 1] {
                s += a.values[k] * x[a.col_indices[k]];
            }
            s
        })
        .collect())
}
