//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here is deliberately written along a different path than the
//! library: dense storage, scatter assembly with finite-difference shape
//! gradients, Cholesky factorization, and plain sequential loops.

#![allow(dead_code)]

use joulebench_core::matrixgen::GridSpec;
use joulebench_core::sparse::CsrMatrix;

/// Dense matrix-vector product.
pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum())
        .collect()
}

/// Sequential dot product, no chunking.
pub fn seq_dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Solve A x = b by dense Cholesky (A SPD).
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(s > 0.0, "matrix not SPD at pivot {i}");
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// A-norm of a vector, dense route.
pub fn a_norm(a: &[Vec<f64>], v: &[f64]) -> f64 {
    seq_dot(v, &dense_matvec(a, v)).sqrt()
}

/// Trilinear shape function on the reference cube, local node a.
fn shape(a: usize, xi: [f64; 3]) -> f64 {
    let sx = if a & 1 == 0 { -1.0 } else { 1.0 };
    let sy = if a & 2 == 0 { -1.0 } else { 1.0 };
    let sz = if a & 4 == 0 { -1.0 } else { 1.0 };
    0.125 * (1.0 + sx * xi[0]) * (1.0 + sy * xi[1]) * (1.0 + sz * xi[2])
}

/// Reference gradient by central differences. The shape functions are
/// linear in each coordinate, so the difference quotient is exact.
fn fd_grad(a: usize, xi: [f64; 3]) -> [f64; 3] {
    let h = 0.5;
    let mut g = [0.0; 3];
    for d in 0..3 {
        let mut hi = xi;
        let mut lo = xi;
        hi[d] += h;
        lo[d] -= h;
        g[d] = (shape(a, hi) - shape(a, lo)) / (2.0 * h);
    }
    g
}

/// Dense assembly of the interior-node Q1 stiffness matrix, 2x2x2 Gauss
/// quadrature, independent of the library's CSR assembly path.
pub fn dense_q1_stiffness(spec: &GridSpec) -> Vec<Vec<f64>> {
    let (nx, ny, nz) = (spec.nx, spec.ny, spec.nz);
    let (hx, hy, hz) = (
        spec.lx / nx as f64,
        spec.ly / ny as f64,
        spec.lz / nz as f64,
    );
    let order = (nx - 1) * (ny - 1) * (nz - 1);
    let mut a = vec![vec![0.0f64; order]; order];
    let g = 1.0 / 3.0f64.sqrt();
    let det_j = hx * hy * hz / 8.0;

    for ez in 0..nz {
        for ey in 0..ny {
            for ex in 0..nx {
                for qa in 0..8usize {
                    let xi = [
                        if qa & 1 == 0 { -g } else { g },
                        if qa & 2 == 0 { -g } else { g },
                        if qa & 4 == 0 { -g } else { g },
                    ];
                    let grads: Vec<[f64; 3]> = (0..8)
                        .map(|node| {
                            let r = fd_grad(node, xi);
                            [r[0] * 2.0 / hx, r[1] * 2.0 / hy, r[2] * 2.0 / hz]
                        })
                        .collect();
                    for na in 0..8usize {
                        let gi = [ex + (na & 1), ey + ((na >> 1) & 1), ez + ((na >> 2) & 1)];
                        if gi[0] < 1 || gi[0] > nx - 1 || gi[1] < 1 || gi[1] > ny - 1 || gi[2] < 1 || gi[2] > nz - 1 {
                            continue;
                        }
                        let ia = (gi[0] - 1) + (nx - 1) * ((gi[1] - 1) + (ny - 1) * (gi[2] - 1));
                        for nb in 0..8usize {
                            let gj = [ex + (nb & 1), ey + ((nb >> 1) & 1), ez + ((nb >> 2) & 1)];
                            if gj[0] < 1 || gj[0] > nx - 1 || gj[1] < 1 || gj[1] > ny - 1 || gj[2] < 1 || gj[2] > nz - 1 {
                                continue;
                            }
                            let ib = (gj[0] - 1) + (nx - 1) * ((gj[1] - 1) + (ny - 1) * (gj[2] - 1));
                            let ga = grads[na];
                            let gb = grads[nb];
                            a[ia][ib] += (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]) * det_j;
                        }
                    }
                }
            }
        }
    }
    a
}

/// Random sparse matrix with about `fill` fraction of stored entries.
pub fn random_sparse(
    n_rows: usize,
    n_cols: usize,
    fill: f64,
    rng: &mut impl rand::Rng,
) -> CsrMatrix {
    let mut triplets = Vec::new();
    for i in 0..n_rows {
        for j in 0..n_cols {
            if rng.gen_bool(fill) {
                triplets.push((i, j, rng.gen_range(-10.0..10.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets).unwrap()
}
