//! Criterion benchmarks for the vector kernels, SpMV, and CG.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use joulebench_core::cg::cg_solve;
use joulebench_core::kernels::{axpy, dot, ewmul, spmv};
use joulebench_core::matrixgen::{generate_gravity_matrix, GridSpec};

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn bench_vector_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("vector");
    for &n in &[10_000usize, 2_000_000, 5_000_000] {
        let x = random_vec(n, 1);
        let y = random_vec(n, 2);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("axpy", n), &n, |b, _| {
            b.iter(|| axpy(1.5, &x, &y).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ewmul", n), &n, |b, _| {
            b.iter(|| ewmul(&x, &y).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dot", n), &n, |b, _| {
            b.iter(|| dot(&x, &y).unwrap())
        });
    }
    group.finish();
}

fn bench_sparse(c: &mut Criterion) {
    let mut group = c.benchmark_group("sparse");
    group.sample_size(20);
    for &(nx, ny, nz) in &[(10usize, 10usize, 5usize), (20, 20, 10), (30, 30, 15)] {
        let spec = GridSpec::with_default_anomaly(nx, ny, nz, 200.0, 200.0, 10.0);
        let (m, rhs) = generate_gravity_matrix(&spec).unwrap();
        let x = random_vec(m.n_cols, 3);
        group.throughput(Throughput::Elements(m.nnz() as u64));
        group.bench_with_input(BenchmarkId::new("spmv", m.n_rows), &m, |b, m| {
            b.iter(|| spmv(m, &x).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cg", m.n_rows), &m, |b, m| {
            b.iter(|| cg_solve(m, &rhs, 1e-8, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_vector_kernels, bench_sparse);
criterion_main!(benches);
