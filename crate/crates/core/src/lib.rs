//! Desk-scale energy benchmarking of sparse linear-algebra kernels.
//!
//! The pipeline: generate gravity-model test matrices ([`matrixgen`]), run
//! CSR kernels and conjugate gradient ([`sparse`], [`kernels`], [`cg`],
//! [`runner`]), acquire power traces (simulated by [`powersim`] or parsed
//! from files by [`trace`]), detect consumption steps and integrate energy
//! ([`steps`]), and orchestrate repeated experiments into table-shaped
//! reports ([`campaign`]).

pub mod campaign;
pub mod cg;
pub mod error;
pub mod kernels;
pub mod matrixgen;
pub mod mm;
pub mod phase;
pub mod powersim;
pub mod runner;
pub mod sparse;
pub mod steps;
pub mod trace;

pub use campaign::{CampaignConfig, CampaignReport, ReportRow};
pub use cg::CgReport;
pub use error::{Error, Result};
pub use matrixgen::{AnomalyBox, GridSpec, MatrixStats};
pub use phase::{Phase, PhaseSchedule};
pub use powersim::PowerModelSpec;
pub use runner::{BenchOperand, BenchResult, Kernel};
pub use sparse::CsrMatrix;
pub use steps::{NoiseProfile, PhaseReport, Step, StepModel};
pub use trace::{PowerSeries, PowerTrace};

use std::io::Write as _;
use std::path::Path;

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
        )),
        None => std::path::PathBuf::from(format!(".{}.tmp", path.display())),
    };
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}
