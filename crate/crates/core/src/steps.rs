//! Step detection and energy integration on power series.
//!
//! The detector is a mean-shift test on adjacent sliding windows: a change
//! point is declared where the difference of the two window means exceeds
//! `k * sigma * sqrt(2 / window)`. Segment levels are the means of the
//! samples between change points; adjacent segments closer than the merge
//! threshold are fused.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::phase::PhaseSchedule;
use crate::trace::PowerSeries;

/// Sensor noise estimated from a step-free calibration capture.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub sigma_w: f64,
    pub n_samples: usize,
}

/// Sample standard deviation of a calibration segment (mean removed).
pub fn estimate_noise(calibration: &PowerSeries) -> Result<NoiseProfile> {
    let n = calibration.len();
    if n < 30 {
        return Err(Error::InvalidParameter(format!(
            "noise calibration needs >= 30 samples, got {n}"
        )));
    }
    let mean = calibration.watts.iter().sum::<f64>() / n as f64;
    let var = calibration
        .watts
        .iter()
        .map(|w| (w - mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    Ok(NoiseProfile { sigma_w: var.sqrt(), n_samples: n })
}

/// One step of a piecewise-constant power model.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub start_s: f64,
    pub level_w: f64,
}

/// Piecewise-constant approximation of a power series.
#[derive(Debug, Clone, PartialEq)]
pub struct StepModel {
    /// Ordered steps; the first starts at the series origin.
    pub steps: Vec<Step>,
    pub end_s: f64,
}

impl StepModel {
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidParameter("step model needs >= 1 step".into()));
        }
        for w in self.steps.windows(2) {
            if w[1].start_s <= w[0].start_s {
                return Err(Error::InvalidParameter(
                    "step start times must be strictly increasing".into(),
                ));
            }
        }
        if self.end_s <= self.steps.last().unwrap().start_s {
            return Err(Error::InvalidParameter("end_s must follow the last step".into()));
        }
        if self.steps.iter().any(|s| !s.level_w.is_finite()) {
            return Err(Error::NonFinite("step levels".into()));
        }
        Ok(())
    }

    pub fn start_s(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.start_s)
    }

    /// Level at time t (t past the end returns the last level).
    pub fn level_at(&self, t: f64) -> f64 {
        let mut level = self.steps[0].level_w;
        for s in &self.steps {
            if s.start_s <= t {
                level = s.level_w;
            } else {
                break;
            }
        }
        level
    }

    /// Sample the model at a uniform rate; sample i takes the level at
    /// start + i * dt.
    pub fn render(&self, sample_period_s: f64) -> PowerSeries {
        let t0 = self.start_s();
        let n = ((self.end_s - t0) / sample_period_s).round() as usize;
        let watts = (0..n)
            .map(|i| self.level_at(t0 + i as f64 * sample_period_s))
            .collect();
        PowerSeries { sample_period_s, t0_s: t0, watts }
    }

    /// CSV: `# end_s:` header, then `start_s,level_w` rows with six
    /// fractional digits on times.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# end_s: {:.6}", self.end_s);
        out.push_str("start_s,level_w\n");
        for s in &self.steps {
            let _ = writeln!(out, "{:.6},{}", s.start_s, s.level_w);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut end_s = None;
        let mut steps = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == "start_s,level_w" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((key, value)) = rest.trim().split_once(':') {
                    if key.trim() == "end_s" {
                        end_s = Some(value.trim().parse::<f64>().map_err(|_| Error::Parse {
                            line: idx + 1,
                            msg: format!("bad end_s '{}'", value.trim()),
                        })?);
                    }
                }
                continue;
            }
            let (a, b) = line.split_once(',').ok_or(Error::Parse {
                line: idx + 1,
                msg: "expected 'start_s,level_w'".into(),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad value '{s}'"),
                })
            };
            steps.push(Step { start_s: parse(a)?, level_w: parse(b)? });
        }
        let model = StepModel {
            steps,
            end_s: end_s.ok_or(Error::Parse { line: 0, msg: "missing '# end_s' header".into() })?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::write_atomic(path.as_ref(), self.to_csv().as_bytes())
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_csv(&text)
    }
}

/// Detector tuning.
#[derive(Debug, Clone)]
pub struct StepDetectParams {
    /// Sliding half-window in samples.
    pub window: usize,
    /// Threshold multiplier on the noise-scaled mean difference.
    pub k: f64,
    /// Minimum distance between change points, in samples.
    pub min_segment: usize,
    /// Fuse adjacent segments closer than this, in watts. `None` picks
    /// max(3 sigma sqrt(2/window), 0.5).
    pub merge_threshold_w: Option<f64>,
}

impl Default for StepDetectParams {
    fn default() -> Self {
        StepDetectParams { window: 50, k: 6.0, min_segment: 50, merge_threshold_w: None }
    }
}

/// Detect the piecewise-constant structure of a power series.
pub fn detect_steps(
    series: &PowerSeries,
    noise: &NoiseProfile,
    params: &StepDetectParams,
) -> Result<StepModel> {
    let n = series.len();
    let w = params.window;
    if w < 4 || params.k <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degenerate detector params: window {w}, k {}",
            params.k
        )));
    }
    if n < 2 * w {
        return Err(Error::InvalidParameter(format!(
            "series length {n} shorter than two windows ({})",
            2 * w
        )));
    }
    if noise.sigma_w < 0.0 {
        return Err(Error::InvalidParameter("sigma must be >= 0".into()));
    }

    let scale = (2.0 / w as f64).sqrt();
    let threshold = params.k * noise.sigma_w * scale;
    let merge_threshold = params
        .merge_threshold_w
        .unwrap_or_else(|| (3.0 * noise.sigma_w * scale).max(0.5));

    // Prefix sums for O(1) window means.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in &series.watts {
        acc += x;
        prefix.push(acc);
    }
    let mean = |lo: usize, hi: usize| (prefix[hi] - prefix[lo]) / (hi - lo) as f64;

    // |mean after i - mean before i| for i in w..=n-w.
    let stat = |i: usize| (mean(i, i + w) - mean(i - w, i)).abs();

    // Greedy peak picking: take the strongest remaining exceedance, mask
    // min_segment samples around it, repeat.
    let lo = w;
    let hi = n - w;
    let mut masked = vec![false; n + 1];
    let mut changes: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in lo..=hi {
            if masked[i] {
                continue;
            }
            let d = stat(i);
            if d > threshold {
                match best {
                    Some((_, bd)) if bd >= d => {}
                    _ => best = Some((i, d)),
                }
            }
        }
        let Some((i, _)) = best else { break };
        changes.push(i);
        let from = i.saturating_sub(params.min_segment);
        let to = (i + params.min_segment).min(n);
        for m in &mut masked[from..=to] {
            *m = true;
        }
    }
    changes.sort_unstable();

    // Segment levels are plain means between change points.
    let mut bounds = vec![0];
    bounds.extend(&changes);
    bounds.push(n);
    let mut segments: Vec<(usize, usize, f64)> = bounds
        .windows(2)
        .map(|b| (b[0], b[1], mean(b[0], b[1])))
        .collect();

    // Fuse adjacent segments with nearly equal levels, recomputing the
    // fused level as the weighted mean, until stable.
    let mut i = 0;
    while i + 1 < segments.len() {
        let (a0, a1, la) = segments[i];
        let (_, b1, lb) = segments[i + 1];
        if (la - lb).abs() < merge_threshold {
            let na = (a1 - a0) as f64;
            let nb = (b1 - segments[i + 1].0) as f64;
            segments[i] = (a0, b1, (la * na + lb * nb) / (na + nb));
            segments.remove(i + 1);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }

    let model = StepModel {
        steps: segments
            .iter()
            .map(|&(start, _, level)| Step {
                start_s: series.time_at(start),
                level_w: level,
            })
            .collect(),
        end_s: series.end_s(),
    };
    model.validate()?;
    Ok(model)
}

/// Energy of a step model over [t_start, t_end], in joules.
pub fn integrate_model(model: &StepModel, t_start: f64, t_end: f64) -> Result<f64> {
    check_bounds(model.start_s(), model.end_s, t_start, t_end)?;
    let mut energy = 0.0;
    for (i, s) in model.steps.iter().enumerate() {
        let seg_end = model
            .steps
            .get(i + 1)
            .map_or(model.end_s, |next| next.start_s);
        let lo = s.start_s.max(t_start);
        let hi = seg_end.min(t_end);
        if hi > lo {
            energy += s.level_w * (hi - lo);
        }
    }
    Ok(energy)
}

/// Left-Riemann energy of a raw series over [t_start, t_end]; each sample
/// contributes its level times the overlap of its sampling interval.
pub fn integrate_series(series: &PowerSeries, t_start: f64, t_end: f64) -> Result<f64> {
    check_bounds(series.t0_s, series.end_s(), t_start, t_end)?;
    let dt = series.sample_period_s;
    let mut energy = 0.0;
    for (i, &p) in series.watts.iter().enumerate() {
        let lo = series.time_at(i).max(t_start);
        let hi = (series.time_at(i) + dt).min(t_end);
        if hi > lo {
            energy += p * (hi - lo);
        }
    }
    Ok(energy)
}

fn check_bounds(t0: f64, end: f64, t_start: f64, t_end: f64) -> Result<()> {
    if !(t_start < t_end) {
        return Err(Error::InvalidParameter(format!(
            "inverted integration bounds [{t_start}, {t_end}]"
        )));
    }
    // Tolerate rounding at the trace edges.
    let slack = 1e-9 * (end - t0).abs().max(1.0);
    if t_start < t0 - slack || t_end > end + slack {
        return Err(Error::InvalidParameter(format!(
            "bounds [{t_start}, {t_end}] outside trace span [{t0}, {end}]"
        )));
    }
    Ok(())
}

/// Per-phase time, mean power, and energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub phase: String,
    pub duration_s: f64,
    pub mean_power_w: f64,
    pub energy_j: f64,
}

/// Slice a step model along a phase schedule.
pub fn segment_phases(model: &StepModel, schedule: &PhaseSchedule) -> Result<Vec<PhaseReport>> {
    schedule
        .phases
        .iter()
        .map(|p| {
            let energy_j = integrate_model(model, p.start_s, p.end_s)?;
            let duration_s = p.duration_s();
            Ok(PhaseReport {
                phase: p.name.clone(),
                duration_s,
                mean_power_w: energy_j / duration_s,
                energy_j,
            })
        })
        .collect()
}

/// Phase reports as CSV `phase,duration_s,mean_power_w,energy_j`.
pub fn phase_reports_to_csv(reports: &[PhaseReport]) -> String {
    let mut out = String::from("phase,duration_s,mean_power_w,energy_j\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            r.phase, r.duration_s, r.mean_power_w, r.energy_j
        );
    }
    out
}
