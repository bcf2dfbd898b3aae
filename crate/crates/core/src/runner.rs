//! Phase-annotated kernel benchmark runner.
//!
//! Runs one kernel repeatedly and records a five-phase schedule
//! {idle, alloc_copy, kernel, copy_back, idle} with wall-clock boundaries.
//! The kernel phase timing reported is the median over repetitions.

use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::cg::cg_solve;
use crate::error::{Error, Result};
use crate::kernels::{axpy, dot, ewmul, spmv};
use crate::phase::{Phase, PhaseSchedule};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Axpy,
    Ewmul,
    Dot,
    Spmv,
    Cg,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Axpy => "axpy",
            Kernel::Ewmul => "ewmul",
            Kernel::Dot => "dot",
            Kernel::Spmv => "spmv",
            Kernel::Cg => "cg",
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axpy" => Ok(Kernel::Axpy),
            "ewmul" => Ok(Kernel::Ewmul),
            "dot" => Ok(Kernel::Dot),
            "spmv" => Ok(Kernel::Spmv),
            "cg" => Ok(Kernel::Cg),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

/// What the kernel runs on: a vector length or an explicit matrix.
#[derive(Debug, Clone)]
pub enum BenchOperand {
    Size(usize),
    Matrix(CsrMatrix),
}

impl BenchOperand {
    /// Problem order used in reports.
    pub fn order(&self) -> usize {
        match self {
            BenchOperand::Size(n) => *n,
            BenchOperand::Matrix(m) => m.n_rows,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub schedule: PhaseSchedule,
    /// Per-repetition kernel wall times, seconds.
    pub kernel_times_s: Vec<f64>,
    /// Median of `kernel_times_s`.
    pub median_kernel_s: f64,
}

fn seeded_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// SPD stand-in matrix for spmv/cg runs given only a size: the 1D
/// Laplacian tridiagonal.
fn laplacian_1d(n: usize) -> Result<CsrMatrix> {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

/// Execute `kernel` `repetitions` times and return the phase schedule plus
/// per-repetition kernel timings.
pub fn run_kernel_benchmark(
    kernel: Kernel,
    operand: &BenchOperand,
    repetitions: usize,
    idle_pad_s: f64,
) -> Result<BenchResult> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
    }
    let clock = Instant::now();
    let mut boundaries = vec![0.0f64];
    let mark = |boundaries: &mut Vec<f64>| {
        let mut t = clock.elapsed().as_secs_f64();
        // Keep boundaries strictly increasing even on coarse clocks.
        let last = *boundaries.last().unwrap();
        if t <= last {
            t = last + 1e-9;
        }
        boundaries.push(t);
    };

    // idle
    std::thread::sleep(std::time::Duration::from_secs_f64(idle_pad_s));
    mark(&mut boundaries);

    // alloc_copy: operand construction
    let n = operand.order();
    let matrix = match (kernel, operand) {
        (Kernel::Spmv | Kernel::Cg, BenchOperand::Matrix(m)) => Some(m.clone()),
        (Kernel::Spmv | Kernel::Cg, BenchOperand::Size(n)) => Some(laplacian_1d(*n)?),
        _ => None,
    };
    let x = seeded_vec(n, 0xBEEF);
    let y = seeded_vec(n, 0xCAFE);
    mark(&mut boundaries);

    // kernel
    let mut times = Vec::with_capacity(repetitions);
    let mut result: Vec<f64> = Vec::new();
    let mut scalar = 0.0;
    for _ in 0..repetitions {
        let t = Instant::now();
        match kernel {
            Kernel::Axpy => result = black_box(axpy(1.5, &x, &y)?),
            Kernel::Ewmul => result = black_box(ewmul(&x, &y)?),
            Kernel::Dot => scalar = black_box(dot(&x, &y)?),
            Kernel::Spmv => result = black_box(spmv(matrix.as_ref().unwrap(), &x)?),
            Kernel::Cg => {
                let a = matrix.as_ref().unwrap();
                let (sol, _) = cg_solve(a, &vec![1.0; a.n_rows], 1e-8, None)?;
                result = black_box(sol);
            }
        }
        times.push(t.elapsed().as_secs_f64().max(1e-9));
    }
    mark(&mut boundaries);

    // copy_back
    let copied = result.clone();
    black_box(&copied);
    black_box(scalar);
    mark(&mut boundaries);

    // idle
    std::thread::sleep(std::time::Duration::from_secs_f64(idle_pad_s));
    mark(&mut boundaries);

    let names = ["idle", "alloc_copy", "kernel", "copy_back", "idle"];
    let phases = names
        .iter()
        .enumerate()
        .map(|(i, name)| Phase {
            name: name.to_string(),
            start_s: boundaries[i],
            end_s: boundaries[i + 1],
        })
        .collect();

    let mut sorted = times.clone();
    Ok(BenchResult {
        schedule: PhaseSchedule::new(phases)?,
        median_kernel_s: median(&mut sorted),
        kernel_times_s: times,
    })
}

/// Deterministic kernel-time model used by reproducible campaigns: a fixed
/// per-operation cost times the operation count.
pub fn modeled_kernel_seconds(kernel: Kernel, operand: &BenchOperand) -> Result<f64> {
    const SECONDS_PER_OP: f64 = 1e-9;
    let n = operand.order() as f64;
    let ops = match kernel {
        Kernel::Axpy | Kernel::Dot => 2.0 * n,
        Kernel::Ewmul => n,
        Kernel::Spmv => {
            let nnz = match operand {
                BenchOperand::Matrix(m) => m.nnz() as f64,
                BenchOperand::Size(s) => (3 * s - 2) as f64,
            };
            2.0 * nnz
        }
        Kernel::Cg => {
            let (a, owned);
            let m = match operand {
                BenchOperand::Matrix(mm) => {
                    a = mm;
                    a
                }
                BenchOperand::Size(s) => {
                    owned = laplacian_1d(*s)?;
                    &owned
                }
            };
            // Iteration count of the actual solve; deterministic for a
            // given matrix.
            let (_, report) = cg_solve(m, &vec![1.0; m.n_rows], 1e-8, None)?;
            report.iterations.max(1) as f64 * (2.0 * m.nnz() as f64 + 12.0 * n)
        }
    };
    Ok(ops * SECONDS_PER_OP)
}
