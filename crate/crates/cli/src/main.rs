//! `joulebench`: command-line front end for the measurement pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use joulebench_core::campaign::{emit_plot_data, emit_report, run_campaign, CampaignConfig, CampaignReport, ReportRow};
use joulebench_core::matrixgen::{generate_gravity_matrix, matrix_stats, GridSpec};
use joulebench_core::mm;
use joulebench_core::phase::PhaseSchedule;
use joulebench_core::powersim::{simulate_trace, PowerModelSpec};
use joulebench_core::runner::{run_kernel_benchmark, BenchOperand, Kernel};
use joulebench_core::steps::{
    detect_steps, estimate_noise, phase_reports_to_csv, segment_phases, StepDetectParams,
};
use joulebench_core::trace::{combine_channels, read_trace_file, write_trace_file, PowerSeries};
use joulebench_core::{write_atomic, Error};

#[derive(Parser)]
#[command(name = "joulebench", version, about = "Sparse-kernel energy benchmarking pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a gravity-model Poisson matrix and its right-hand side.
    GenMatrix(GenMatrixArgs),
    /// Print structural statistics of a Matrix Market file as one CSV row.
    Stats(StatsArgs),
    /// Run a kernel benchmark and record its phase schedule and timings.
    Bench(BenchArgs),
    /// Simulate a power trace for a phase schedule.
    Simulate(SimulateArgs),
    /// Detect the step structure of a recorded trace.
    Analyze(AnalyzeArgs),
    /// Run a full campaign from a TOML config.
    Campaign(CampaignArgs),
    /// Emit per-kernel plot data from a campaign report.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenMatrixArgs {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    #[arg(long)]
    nz: usize,
    /// Domain extent in x, meters.
    #[arg(long, default_value_t = 200.0)]
    lx: f64,
    /// Domain extent in y, meters.
    #[arg(long, default_value_t = 200.0)]
    ly: f64,
    /// Domain extent in z, meters.
    #[arg(long, default_value_t = 10.0)]
    lz: f64,
    /// Density contrast of the centered anomaly, kg/m^3.
    #[arg(long, default_value_t = 500.0)]
    drho: f64,
    /// Output Matrix Market path; the right-hand side goes next to it
    /// with extension `rhs`.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Matrix Market file.
    #[arg(short, long)]
    input: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// One of: axpy, ewmul, dot, spmv, cg.
    #[arg(long)]
    kernel: String,
    /// Vector length or matrix order.
    #[arg(long, conflicts_with = "matrix")]
    size: Option<usize>,
    /// Matrix Market file operand for spmv/cg.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Idle padding before and after the work phases, seconds.
    #[arg(long, default_value_t = 0.05)]
    idle_pad_s: f64,
    /// Output directory for schedule.csv and timings.csv.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Power model TOML.
    #[arg(long)]
    model: PathBuf,
    /// Phase schedule CSV.
    #[arg(long)]
    schedule: PathBuf,
    /// Overrides the model's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for trace.csv and steps.csv (ground truth).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trace file to analyze.
    #[arg(long)]
    trace: PathBuf,
    /// Leading samples used for noise calibration.
    #[arg(long, default_value_t = 500)]
    noise_sample: usize,
    /// Detector half-window, samples.
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Detector threshold multiplier.
    #[arg(long, default_value_t = 6.0)]
    k: f64,
    /// Phase schedule CSV; when given, per-phase reports are emitted too.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Output directory for steps.csv (and phases.csv); stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    /// Campaign TOML config.
    #[arg(long)]
    config: PathBuf,
    /// Report CSV path.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Campaign report CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory for per-kernel time/energy plot data.
    #[arg(long)]
    plots: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes, everything else is a
            // usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("joulebench: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> joulebench_core::Result<()> {
    match cli.command {
        Command::GenMatrix(a) => gen_matrix(a),
        Command::Stats(a) => stats(a),
        Command::Bench(a) => bench(a),
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Campaign(a) => campaign(a),
        Command::Report(a) => report(a),
    }
}

fn gen_matrix(a: GenMatrixArgs) -> joulebench_core::Result<()> {
    let mut spec = GridSpec::with_default_anomaly(a.nx, a.ny, a.nz, a.lx, a.ly, a.lz);
    spec.anomaly.delta_rho = a.drho;
    let (m, rhs) = generate_gravity_matrix(&spec)?;
    mm::write_matrix_market_file(&m, &a.output)?;
    mm::write_vector_file(&rhs, a.output.with_extension("rhs"))?;
    println!("wrote order-{} matrix with {} nonzeros", m.n_rows, m.nnz());
    Ok(())
}

fn stats(a: StatsArgs) -> joulebench_core::Result<()> {
    let m = mm::read_matrix_market_file(&a.input)?;
    println!("{}", matrix_stats(&m).to_csv_row());
    Ok(())
}

fn bench(a: BenchArgs) -> joulebench_core::Result<()> {
    let kernel: Kernel = a.kernel.parse()?;
    let operand = match (a.size, &a.matrix) {
        (Some(n), None) => BenchOperand::Size(n),
        (None, Some(path)) => BenchOperand::Matrix(mm::read_matrix_market_file(path)?),
        _ => {
            return Err(Error::InvalidParameter(
                "exactly one of --size and --matrix is required".into(),
            ))
        }
    };
    let result = run_kernel_benchmark(kernel, &operand, a.reps, a.idle_pad_s)?;
    std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
    result.schedule.write_csv_file(a.output.join("schedule.csv"))?;
    let mut timings = String::from("rep,kernel_s\n");
    for (i, t) in result.kernel_times_s.iter().enumerate() {
        timings.push_str(&format!("{i},{t:.9}\n"));
    }
    write_atomic(&a.output.join("timings.csv"), timings.as_bytes())?;
    println!("median kernel time: {:.9} s", result.median_kernel_s);
    Ok(())
}

fn read_to_string(path: &Path) -> joulebench_core::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn simulate(a: SimulateArgs) -> joulebench_core::Result<()> {
    let mut spec: PowerModelSpec = toml::from_str(&read_to_string(&a.model)?)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if let Some(seed) = a.seed {
        spec.rng_seed = seed;
    }
    let schedule = PhaseSchedule::read_csv_file(&a.schedule)?;
    let (trace, truth) = simulate_trace(&spec, &schedule)?;
    std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
    write_trace_file(&trace, a.output.join("trace.csv"))?;
    truth.write_csv_file(a.output.join("steps.csv"))?;
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> joulebench_core::Result<()> {
    let trace = read_trace_file(&a.trace)?;
    let series = combine_channels(&trace)?;
    let calibration = PowerSeries {
        sample_period_s: series.sample_period_s,
        t0_s: series.t0_s,
        watts: series.watts[..a.noise_sample.min(series.len())].to_vec(),
    };
    let noise = estimate_noise(&calibration)?;
    let params = StepDetectParams {
        window: a.window,
        k: a.k,
        min_segment: a.window,
        merge_threshold_w: None,
    };
    let model = detect_steps(&series, &noise, &params)?;

    let phases_csv = match &a.schedule {
        Some(path) => {
            let schedule = PhaseSchedule::read_csv_file(path)?;
            Some(phase_reports_to_csv(&segment_phases(&model, &schedule)?))
        }
        None => None,
    };

    match &a.output {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            model.write_csv_file(dir.join("steps.csv"))?;
            if let Some(csv) = phases_csv {
                write_atomic(&dir.join("phases.csv"), csv.as_bytes())?;
            }
        }
        None => {
            print!("{}", model.to_csv());
            if let Some(csv) = phases_csv {
                print!("{csv}");
            }
        }
    }
    Ok(())
}

fn campaign(a: CampaignArgs) -> joulebench_core::Result<()> {
    let config = CampaignConfig::from_file(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let report = run_campaign(&config, base)?;
    emit_report(&report, &a.output)?;
    Ok(())
}

fn report(a: ReportArgs) -> joulebench_core::Result<()> {
    let report = parse_report_csv(&read_to_string(&a.input)?)?;
    emit_plot_data(&report, &a.plots)?;
    Ok(())
}

/// Rebuild a report from its CSV. The kernel column is not stored, so it is
/// recovered from the experiment name's leading `<kernel>_` token when
/// present, otherwise the whole name is used as the plot group.
fn parse_report_csv(text: &str) -> joulebench_core::Result<CampaignReport> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse { line: idx + 1, msg: "expected 6 fields".into() });
        }
        let num = |i: usize| -> joulebench_core::Result<f64> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad number '{}'", fields[i]),
            })
        };
        let int = |i: usize| -> joulebench_core::Result<usize> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad count '{}'", fields[i]),
            })
        };
        let experiment = fields[0].to_string();
        let kernel = match experiment.split('_').next() {
            Some(prefix) if prefix.parse::<Kernel>().is_ok() => prefix.to_string(),
            _ => experiment.clone(),
        };
        rows.push(ReportRow {
            experiment,
            kernel,
            n: int(1)?,
            time_s: num(2)?,
            power_w: num(3)?,
            energy_j: num(4)?,
            pattern_support: int(5)?,
        });
    }
    Ok(CampaignReport { rows })
}
