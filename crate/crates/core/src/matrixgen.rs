//! Gravity-model test matrices.
//!
//! Assembles the stiffness matrix of -laplacian(phi) = 4 pi G drho on a
//! uniform hexahedral mesh with trilinear (Q1) elements and homogeneous
//! Dirichlet boundary conditions. Boundary rows and columns are eliminated,
//! so the system holds interior unknowns only and stays symmetric positive
//! definite with at most 27 nonzeros per row.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Axis-aligned density anomaly inside the domain.
#[derive(Debug, Clone)]
pub struct AnomalyBox {
    /// Lower corner (km).
    pub min: [f64; 3],
    /// Upper corner (km).
    pub max: [f64; 3],
    /// Density anomaly (kg/m^3).
    pub delta_rho: f64,
    /// Gravitational constant.
    pub gravitational_constant: f64,
}

impl AnomalyBox {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|d| self.min[d] <= p[d] && p[d] <= self.max[d])
    }
}

/// Uniform hexahedral mesh of a box domain.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Element counts per axis.
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Physical box dimensions (km).
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub anomaly: AnomalyBox,
}

impl GridSpec {
    /// Grid with a centered anomaly spanning the middle half of each axis,
    /// default constants.
    pub fn with_default_anomaly(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, lz: f64) -> Self {
        GridSpec {
            nx,
            ny,
            nz,
            lx,
            ly,
            lz,
            anomaly: AnomalyBox {
                min: [lx * 0.25, ly * 0.25, lz * 0.25],
                max: [lx * 0.75, ly * 0.75, lz * 0.75],
                delta_rho: 500.0,
                gravitational_constant: 6.674e-11,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || self.nz < 2 {
            return Err(Error::InvalidGrid(format!(
                "grid {}x{}x{} has no interior nodes; need at least 2 elements per axis",
                self.nx, self.ny, self.nz
            )));
        }
        for (l, name) in [(self.lx, "lx"), (self.ly, "ly"), (self.lz, "lz")] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        let a = &self.anomaly;
        if !a.delta_rho.is_finite() || !a.gravitational_constant.is_finite() {
            return Err(Error::NonFinite("anomaly constants".into()));
        }
        if a.gravitational_constant <= 0.0 {
            return Err(Error::InvalidGrid("gravitational constant must be > 0".into()));
        }
        let dims = [self.lx, self.ly, self.lz];
        for d in 0..3 {
            if !(a.min[d] < a.max[d]) {
                return Err(Error::InvalidGrid("anomaly box must have positive volume".into()));
            }
            if a.min[d] < 0.0 || a.max[d] > dims[d] {
                return Err(Error::InvalidGrid("anomaly box must lie inside the domain".into()));
            }
        }
        Ok(())
    }

    /// Number of interior unknowns, (nx-1)(ny-1)(nz-1).
    pub fn order(&self) -> usize {
        (self.nx - 1) * (self.ny - 1) * (self.nz - 1)
    }
}

/// Structural statistics of a sparse matrix, one row of the matrix canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStats {
    /// Matrix order.
    pub h: usize,
    /// Nonzero count.
    pub nz: usize,
    /// nz / h^2, as a fraction in (0, 1].
    pub density: f64,
    /// max |i - j| over stored nonzeros.
    pub bandwidth: usize,
    /// Maximum nonzeros in any row.
    pub max_row: usize,
    /// nz / h.
    pub mean_row: f64,
    /// Population standard deviation of per-row nonzero counts.
    pub row_stddev: f64,
}

impl MatrixStats {
    /// One CSV row: h,nz,density,bandwidth,max_row,mean_row,row_stddev.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.h, self.nz, self.density, self.bandwidth, self.max_row, self.mean_row, self.row_stddev
        )
    }
}

/// Compute the canvas statistics of a CSR matrix.
pub fn matrix_stats(m: &CsrMatrix) -> MatrixStats {
    let h = m.n_rows;
    let nz = m.nnz();
    let mut bandwidth = 0usize;
    let mut max_row = 0usize;
    // Variance via the integer numerator sum((h*len - nz)^2) / h^3 so that
    // exact decimal values survive the float conversion.
    let mut num = 0u128;
    for i in 0..h {
        let len = m.row_offsets[i + 1] - m.row_offsets[i];
        let d = (h as i128) * (len as i128) - nz as i128;
        num += (d * d) as u128;
        max_row = max_row.max(len);
        for (j, _) in m.row(i) {
            bandwidth = bandwidth.max(i.abs_diff(j));
        }
    }
    let mean_row = nz as f64 / h as f64;
    let var = num as f64 / (h as f64 * h as f64 * h as f64);
    MatrixStats {
        h,
        nz,
        density: nz as f64 / (h as f64 * h as f64),
        bandwidth,
        max_row,
        mean_row,
        row_stddev: var.sqrt(),
    }
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Local node sign pattern; node a = dx + 2 dy + 4 dz.
fn node_signs(a: usize) -> [f64; 3] {
    [
        if a & 1 == 0 { -1.0 } else { 1.0 },
        if a & 2 == 0 { -1.0 } else { 1.0 },
        if a & 4 == 0 { -1.0 } else { 1.0 },
    ]
}

fn shape(a: usize, xi: [f64; 3]) -> f64 {
    let s = node_signs(a);
    0.125 * (1.0 + s[0] * xi[0]) * (1.0 + s[1] * xi[1]) * (1.0 + s[2] * xi[2])
}

/// Physical gradient of shape function a at reference point xi, for an
/// element of size hx x hy x hz.
fn shape_grad(a: usize, xi: [f64; 3], hx: f64, hy: f64, hz: f64) -> [f64; 3] {
    let s = node_signs(a);
    [
        0.125 * s[0] * (1.0 + s[1] * xi[1]) * (1.0 + s[2] * xi[2]) * (2.0 / hx),
        0.125 * s[1] * (1.0 + s[0] * xi[0]) * (1.0 + s[2] * xi[2]) * (2.0 / hy),
        0.125 * s[2] * (1.0 + s[0] * xi[0]) * (1.0 + s[1] * xi[1]) * (2.0 / hz),
    ]
}

/// 8x8 element stiffness of -laplacian by 2x2x2 Gauss quadrature.
///
/// Entries (a, b) and (b, a) are accumulated with the same operations in
/// the same order, so the element matrix is bitwise symmetric.
fn element_stiffness(hx: f64, hy: f64, hz: f64) -> [[f64; 8]; 8] {
    let det_j = hx * hy * hz / 8.0;
    let mut k = [[0.0; 8]; 8];
    for &gx in &GAUSS {
        for &gy in &GAUSS {
            for &gz in &GAUSS {
                let xi = [gx, gy, gz];
                let grads: Vec<[f64; 3]> =
                    (0..8).map(|a| shape_grad(a, xi, hx, hy, hz)).collect();
                for a in 0..8 {
                    for b in 0..8 {
                        let ga = grads[a];
                        let gb = grads[b];
                        k[a][b] += (ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2]) * det_j;
                    }
                }
            }
        }
    }
    k
}

/// Assemble the interior-node stiffness matrix and load vector.
///
/// The matrix order is (nx-1)(ny-1)(nz-1); the load is the Q1 projection of
/// f = 4 pi G drho restricted to the anomaly box, with homogeneous Dirichlet
/// data. Element iteration order is fixed, so the output is bit-stable.
pub fn generate_gravity_matrix(spec: &GridSpec) -> Result<(CsrMatrix, Vec<f64>)> {
    spec.validate()?;
    let (nx, ny, nz) = (spec.nx, spec.ny, spec.nz);
    let (hx, hy, hz) = (
        spec.lx / nx as f64,
        spec.ly / ny as f64,
        spec.lz / nz as f64,
    );
    let order = spec.order();
    let f_amplitude =
        4.0 * std::f64::consts::PI * spec.anomaly.gravitational_constant * spec.anomaly.delta_rho;

    // Interior node (i,j,k), 1 <= i <= nx-1 etc., to unknown index.
    let interior_id = |i: usize, j: usize, k: usize| -> Option<usize> {
        if i >= 1 && i <= nx - 1 && j >= 1 && j <= ny - 1 && k >= 1 && k <= nz - 1 {
            Some((i - 1) + (nx - 1) * ((j - 1) + (ny - 1) * (k - 1)))
        } else {
            None
        }
    };

    let ke = element_stiffness(hx, hy, hz);
    let det_j = hx * hy * hz / 8.0;

    let mut triplets = Vec::with_capacity(nx * ny * nz * 64);
    let mut rhs = vec![0.0; order];

    for ez in 0..nz {
        for ey in 0..ny {
            for ex in 0..nx {
                // Global interior ids of the 8 element nodes.
                let mut ids = [None; 8];
                for (a, id) in ids.iter_mut().enumerate() {
                    let dx = a & 1;
                    let dy = (a >> 1) & 1;
                    let dz = (a >> 2) & 1;
                    *id = interior_id(ex + dx, ey + dy, ez + dz);
                }

                for (a, &ia) in ids.iter().enumerate() {
                    let Some(ia) = ia else { continue };
                    for (b, &ib) in ids.iter().enumerate() {
                        if let Some(ib) = ib {
                            triplets.push((ia, ib, ke[a][b]));
                        }
                    }
                }

                // Element load by the same quadrature, with the source
                // indicator evaluated at mapped quadrature points.
                if f_amplitude != 0.0 {
                    for &gx in &GAUSS {
                        for &gy in &GAUSS {
                            for &gz in &GAUSS {
                                let p = [
                                    (ex as f64 + (gx + 1.0) / 2.0) * hx,
                                    (ey as f64 + (gy + 1.0) / 2.0) * hy,
                                    (ez as f64 + (gz + 1.0) / 2.0) * hz,
                                ];
                                if !spec.anomaly.contains(p) {
                                    continue;
                                }
                                for (a, &ia) in ids.iter().enumerate() {
                                    if let Some(ia) = ia {
                                        rhs[ia] +=
                                            f_amplitude * shape(a, [gx, gy, gz]) * det_j;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let matrix = CsrMatrix::from_triplets(order, order, &triplets)?;
    Ok((matrix, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cg::cg_solve;

    fn spec_unit(nx: usize, ny: usize, nz: usize) -> GridSpec {
        GridSpec::with_default_anomaly(nx, ny, nz, 200.0, 200.0, 10.0)
    }

    #[test]
    fn order_matches_interior_count() {
        let (m, _) = generate_gravity_matrix(&spec_unit(10, 10, 5)).unwrap();
        assert_eq!(m.n_rows, 9 * 9 * 4);
        assert_eq!(m.n_rows, 324);
    }

    #[test]
    fn max_row_is_27() {
        let (m, _) = generate_gravity_matrix(&spec_unit(10, 10, 5)).unwrap();
        assert_eq!(matrix_stats(&m).max_row, 27);
    }

    #[test]
    fn zero_anomaly_gives_zero_rhs() {
        let mut spec = spec_unit(10, 10, 5);
        spec.anomaly.delta_rho = 0.0;
        let (_, rhs) = generate_gravity_matrix(&spec).unwrap();
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_small_grid_rejected() {
        let spec = spec_unit(1, 10, 5);
        assert!(generate_gravity_matrix(&spec).is_err());
    }

    #[test]
    fn anomaly_outside_domain_rejected() {
        let mut spec = spec_unit(4, 4, 4);
        spec.anomaly.max[0] = 300.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn matrix_is_bitwise_symmetric() {
        let (m, _) = generate_gravity_matrix(&spec_unit(6, 6, 6)).unwrap();
        assert!(m.is_symmetric());
    }

    #[test]
    fn diagonal_is_positive_and_cg_converges() {
        let (m, _) = generate_gravity_matrix(&spec_unit(6, 6, 5)).unwrap();
        for i in 0..m.n_rows {
            assert!(m.get(i, i) > 0.0, "diagonal entry {i}");
        }
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let b: Vec<f64> = (0..m.n_rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, report) = cg_solve(&m, &b, 1e-10, None).unwrap();
        assert!(report.converged);
    }

    #[test]
    fn interior_row_sums_vanish() {
        // Rows of nodes with all 26 neighbors interior annihilate constants.
        let spec = spec_unit(8, 8, 8);
        let (m, _) = generate_gravity_matrix(&spec).unwrap();
        let n1 = spec.nx - 1;
        let n2 = spec.ny - 1;
        let mut checked = 0;
        for k in 2..spec.nz - 1 {
            for j in 2..spec.ny - 1 {
                for i in 2..spec.nx - 1 {
                    let id = (i - 1) + n1 * ((j - 1) + n2 * (k - 1));
                    let sum: f64 = m.row(id).map(|(_, v)| v).sum();
                    let diag = m.get(id, id);
                    assert!(sum.abs() <= 1e-10 * diag, "row {id} sum {sum}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn refinement_trends() {
        let s1 = matrix_stats(&generate_gravity_matrix(&spec_unit(6, 6, 6)).unwrap().0);
        let s2 = matrix_stats(&generate_gravity_matrix(&spec_unit(10, 10, 10)).unwrap().0);
        assert_eq!(s1.max_row, 27);
        assert_eq!(s2.max_row, 27);
        assert!(s2.mean_row > s1.mean_row);
        assert!(s2.mean_row < 27.0);
        assert!(s2.row_stddev < s1.row_stddev);
    }

    #[test]
    fn stats_worked_example() {
        // The 5x5 matrix with per-row nonzero counts 2,2,2,3,2.
        let m = CsrMatrix::from_triplets(
            5,
            5,
            &[
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
            ],
        )
        .unwrap();
        let s = matrix_stats(&m);
        assert_eq!(s.h, 5);
        assert_eq!(s.nz, 11);
        assert_eq!(s.mean_row, 2.2);
        assert_eq!(s.max_row, 3);
        assert_eq!(s.bandwidth, 2);
        assert_eq!(s.density, 0.44);
        assert_eq!(s.row_stddev, 0.4);
        assert_eq!(s.to_csv_row(), "5,11,0.44,2,3,2.2,0.4");
    }

    #[test]
    fn identity_stats() {
        let t: Vec<_> = (0..4).map(|i| (i, i, 1.0)).collect();
        let m = CsrMatrix::from_triplets(4, 4, &t).unwrap();
        let s = matrix_stats(&m);
        assert_eq!(
            (s.h, s.nz, s.bandwidth, s.max_row),
            (4, 4, 0, 1)
        );
        assert_eq!(s.density, 0.25);
        assert_eq!(s.row_stddev, 0.0);
    }
}
