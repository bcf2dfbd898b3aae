//! Oracle cross-checks: every numeric path in the library against an
//! independently coded dense or sequential route.

mod common;

use common::*;
use joulebench_core::cg::cg_solve;
use joulebench_core::kernels::{dot, spmv};
use joulebench_core::matrixgen::{generate_gravity_matrix, GridSpec};
use joulebench_core::sparse::CsrMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gravity(nx: usize, ny: usize, nz: usize) -> (CsrMatrix, Vec<f64>) {
    let spec = GridSpec::with_default_anomaly(nx, ny, nz, 200.0, 200.0, 10.0);
    generate_gravity_matrix(&spec).unwrap()
}

#[test]
fn gravity_matrix_matches_dense_assembly() {
    let spec = GridSpec::with_default_anomaly(6, 6, 6, 200.0, 200.0, 10.0);
    let (m, _) = generate_gravity_matrix(&spec).unwrap();
    let dense = dense_q1_stiffness(&spec);
    let scale = dense
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let got = m.to_dense();
    for i in 0..m.n_rows {
        for j in 0..m.n_cols {
            assert!(
                (got[i][j] - dense[i][j]).abs() <= 1e-12 * scale,
                "entry ({i}, {j}): {} vs {}",
                got[i][j],
                dense[i][j]
            );
        }
    }
}

#[test]
fn spmv_matches_dense_oracle_on_gravity_matrix() {
    let (m, _) = gravity(10, 10, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..m.n_cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = spmv(&m, &x).unwrap();
    let expected = dense_matvec(&m.to_dense(), &x);
    let scale = expected.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in y.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-12 * scale);
    }
}

#[test]
fn spmv_matches_dense_oracle_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..100 {
        let n = rng.gen_range(1..=200);
        let m = random_sparse(n, n, 0.1, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = spmv(&m, &x).unwrap();
        let expected = dense_matvec(&m.to_dense(), &x);
        let scale = expected.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in y.iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-12 * scale, "trial {trial}");
        }
    }
}

#[test]
fn cg_on_gravity_matrix_matches_cholesky() {
    let (m, rhs) = gravity(10, 10, 5);
    let (x, report) = cg_solve(&m, &rhs, 1e-10, None).unwrap();
    assert!(report.converged);
    assert!(report.final_relative_residual <= 1e-10);
    let expected = cholesky_solve(&m.to_dense(), &rhs);
    let scale = expected.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (a, b) in x.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
    }
}

#[test]
fn cg_a_norm_error_is_monotone() {
    // Re-run CG step by step against the dense solution and check the
    // A-norm of the error never grows.
    let (m, rhs) = gravity(5, 5, 4);
    let dense = m.to_dense();
    let x_star = cholesky_solve(&dense, &rhs);
    let n = m.n_rows;
    let mut prev = f64::INFINITY;
    for iters in 1..=12 {
        let (x, _) = cg_solve(&m, &rhs, 1e-15, Some(iters)).unwrap();
        let err: Vec<f64> = x.iter().zip(&x_star).map(|(a, b)| a - b).collect();
        let e = a_norm(&dense, &err);
        assert!(
            e <= prev * (1.0 + 1e-10),
            "A-norm error grew at iteration {iters}: {e} > {prev}"
        );
        prev = e;
        if e <= 1e-12 {
            break;
        }
    }
    let _ = n;
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csr_from_dense_round_trip(
        entries in proptest::collection::vec((0usize..8, 0usize..8, -10.0f64..10.0), 0..40)
    ) {
        let m = CsrMatrix::from_triplets(8, 8, &entries).unwrap();
        let dense = m.to_dense();
        let mut back = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                // to_dense drops structural zeros, so skip them on both sides
                if v != 0.0 {
                    back.push((i, j, v));
                }
            }
        }
        let m2 = CsrMatrix::from_triplets(8, 8, &back).unwrap();
        prop_assert_eq!(m2.to_dense(), dense);
    }

    #[test]
    fn dot_matches_sequential_oracle(
        pair in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5000)
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pair.into_iter().unzip();
        let d = dot(&x, &y).unwrap();
        let s = seq_dot(&x, &y);
        prop_assert!((d - s).abs() <= 1e-12 * s.abs().max(1.0));
    }
}
