//! Unpreconditioned conjugate gradient for SPD systems.

use crate::error::{Error, Result};
use crate::kernels::{axpy, dot, norm2, spmv};
use crate::sparse::CsrMatrix;

/// Convergence record of one CG solve.
#[derive(Debug, Clone)]
pub struct CgReport {
    pub iterations: usize,
    /// 2-norm of the (recursively updated) residual, one entry per
    /// iteration plus the initial residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// True residual ||b - A x|| / ||b||, recomputed once at exit.
    pub final_relative_residual: f64,
}

/// Solve A x = b with CG from x0 = 0.
///
/// Stops when ||r_k|| / ||b|| <= tol or after `max_iter` iterations
/// (defaulting to the matrix order when `None`). A breakdown p'Ap <= 0
/// signals non-SPD input.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<(Vec<f64>, CgReport)> {
    if a.n_rows != a.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "CG needs a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    if a.n_cols != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix order {} vs rhs length {}",
            a.n_cols,
            b.len()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tol {tol} not in (0, 1)")));
    }
    let max_iter = max_iter.unwrap_or(a.n_rows).max(1);

    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; b.len()],
            CgReport {
                iterations: 0,
                residual_history: vec![0.0],
                converged: true,
                final_relative_residual: 0.0,
            },
        ));
    }

    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r)?;
    let mut history = vec![rr.sqrt()];
    let mut converged = rr.sqrt() / norm_b <= tol;
    let mut iterations = 0;

    while !converged && iterations < max_iter {
        let ap = spmv(a, &p)?;
        let pap = dot(&p, &ap)?;
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite(pap));
        }
        let alpha = rr / pap;
        x = axpy(alpha, &p, &x)?;
        r = axpy(-alpha, &ap, &r)?;
        let rr_next = dot(&r, &r)?;
        iterations += 1;
        history.push(rr_next.sqrt());
        converged = rr_next.sqrt() / norm_b <= tol;
        let beta = rr_next / rr;
        rr = rr_next;
        p = axpy(beta, &p, &r)?;
    }

    let true_residual = axpy(-1.0, &spmv(a, &x)?, b)?;
    let final_relative_residual = norm2(&true_residual) / norm_b;

    Ok((
        x,
        CgReport {
            iterations,
            residual_history: history,
            converged,
            final_relative_residual,
        },
    ))
}
