//! Oscilloscope-style trace files and power series.
//!
//! Trace file contract: UTF-8 text, `#`-prefixed header lines
//! `# sample_period_s: <float>`, `# supply_volts: <float>`,
//! `# gains_a_per_v: <g1>,<g2>,...` (plus optional `# t0_s: <float>`),
//! then one comma-separated row of volts per sample, one column per
//! channel. A row may carry a leading time column (channels + 1 columns);
//! timestamps must then be uniform at the declared period.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One amperometric clamp: output gain and raw samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    /// Amperes per volt of clamp output.
    pub gain_a_per_v: f64,
    pub samples_v: Vec<f64>,
}

/// Multi-channel voltage-vs-time capture.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    pub sample_period_s: f64,
    pub supply_volts: f64,
    pub t0_s: f64,
    pub channels: Vec<Channel>,
}

/// Power samples in watts at a uniform rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub sample_period_s: f64,
    pub t0_s: f64,
    pub watts: Vec<f64>,
}

impl PowerSeries {
    pub fn len(&self) -> usize {
        self.watts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.watts.is_empty()
    }

    /// Time of sample i.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0_s + i as f64 * self.sample_period_s
    }

    pub fn end_s(&self) -> f64 {
        self.time_at(self.len())
    }
}

impl PowerTrace {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period_s > 0.0) {
            return Err(Error::InvalidTrace("sample period must be > 0".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::InvalidTrace("trace needs at least one channel".into()));
        }
        let len = self.channels[0].samples_v.len();
        if len < 2 {
            return Err(Error::InvalidTrace("trace needs at least 2 samples".into()));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.samples_v.len() != len {
                return Err(Error::InvalidTrace(format!(
                    "channel {i} has {} samples, expected {len}",
                    ch.samples_v.len()
                )));
            }
            if !(ch.gain_a_per_v > 0.0) {
                return Err(Error::InvalidTrace(format!("channel {i} gain must be > 0")));
            }
            if ch.samples_v.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("channel {i} samples")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.samples_v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// watts[t] = supply * sum over channels of gain * volts[t]
pub fn combine_channels(trace: &PowerTrace) -> Result<PowerSeries> {
    trace.validate()?;
    let n = trace.len();
    let mut watts = vec![0.0; n];
    for ch in &trace.channels {
        for (w, v) in watts.iter_mut().zip(&ch.samples_v) {
            *w += ch.gain_a_per_v * v;
        }
    }
    for w in &mut watts {
        *w *= trace.supply_volts;
    }
    Ok(PowerSeries {
        sample_period_s: trace.sample_period_s,
        t0_s: trace.t0_s,
        watts,
    })
}

/// Centered moving mean with truncated windows at the edges; output length
/// equals input length. The window must be odd and no longer than the series.
pub fn moving_average(series: &PowerSeries, window: usize) -> Result<PowerSeries> {
    let n = series.len();
    if window % 2 == 0 || window == 0 {
        return Err(Error::InvalidParameter(format!(
            "moving average window {window} must be odd"
        )));
    }
    if window > n {
        return Err(Error::InvalidParameter(format!(
            "window {window} exceeds series length {n}"
        )));
    }
    let half = window / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let sum: f64 = series.watts[lo..hi].iter().sum();
        out.push(sum / (hi - lo) as f64);
    }
    Ok(PowerSeries {
        sample_period_s: series.sample_period_s,
        t0_s: series.t0_s,
        watts: out,
    })
}

/// Canonical serialization: headers then volts-only rows.
pub fn serialize_trace(trace: &PowerTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sample_period_s: {}", trace.sample_period_s);
    let _ = writeln!(out, "# supply_volts: {}", trace.supply_volts);
    let gains: Vec<String> = trace
        .channels
        .iter()
        .map(|c| format!("{}", c.gain_a_per_v))
        .collect();
    let _ = writeln!(out, "# gains_a_per_v: {}", gains.join(","));
    let _ = writeln!(out, "# t0_s: {}", trace.t0_s);
    for i in 0..trace.len() {
        let row: Vec<String> = trace
            .channels
            .iter()
            .map(|c| format!("{}", c.samples_v[i]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<PowerTrace> {
    let mut sample_period = None;
    let mut supply = 12.0;
    let mut t0 = 0.0;
    let mut gains: Option<Vec<f64>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut has_time_column = false;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once(':') {
                let value = value.trim();
                let bad = |what: &str| Error::Parse {
                    line: lineno,
                    msg: format!("bad {what} '{value}'"),
                };
                match key.trim() {
                    "sample_period_s" => {
                        sample_period =
                            Some(value.parse::<f64>().map_err(|_| bad("sample period"))?)
                    }
                    "supply_volts" => {
                        supply = value.parse::<f64>().map_err(|_| bad("supply voltage"))?
                    }
                    "t0_s" => t0 = value.parse::<f64>().map_err(|_| bad("start time"))?,
                    "gains_a_per_v" => {
                        let parsed: std::result::Result<Vec<f64>, _> =
                            value.split(',').map(|g| g.trim().parse::<f64>()).collect();
                        gains = Some(parsed.map_err(|_| bad("gain list"))?);
                    }
                    _ => {} // unknown comment headers are ignored
                }
            }
            continue;
        }

        let gains_ref = gains.as_ref().ok_or(Error::Parse {
            line: lineno,
            msg: "data row before '# gains_a_per_v' header".into(),
        })?;
        let n_ch = gains_ref.len();
        let fields: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let fields = fields.map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad sample row '{line}'"),
        })?;

        if columns.is_empty() {
            has_time_column = fields.len() == n_ch + 1;
            columns = vec![Vec::new(); n_ch];
        }
        let expected = n_ch + usize::from(has_time_column);
        if fields.len() != expected {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("ragged row: {} columns, expected {expected}", fields.len()),
            });
        }
        let volts = if has_time_column {
            times.push(fields[0]);
            &fields[1..]
        } else {
            &fields[..]
        };
        for (col, &v) in columns.iter_mut().zip(volts) {
            col.push(v);
        }
    }

    let sample_period = sample_period.ok_or(Error::Parse {
        line: 0,
        msg: "missing '# sample_period_s' header".into(),
    })?;
    let gains = gains.ok_or(Error::Parse {
        line: 0,
        msg: "missing '# gains_a_per_v' header".into(),
    })?;

    if has_time_column && !times.is_empty() {
        t0 = times[0];
        for (i, w) in times.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidTrace(format!(
                    "non-monotone time column at sample {}",
                    i + 1
                )));
            }
            if ((w[1] - w[0]) - sample_period).abs() > 1e-9 {
                return Err(Error::InvalidTrace(format!(
                    "non-uniform timestamps at sample {}: dt = {}",
                    i + 1,
                    w[1] - w[0]
                )));
            }
        }
    }

    let trace = PowerTrace {
        sample_period_s: sample_period,
        supply_volts: supply,
        t0_s: t0,
        channels: gains
            .into_iter()
            .zip(columns)
            .map(|(gain_a_per_v, samples_v)| Channel { gain_a_per_v, samples_v })
            .collect(),
    };
    trace.validate()?;
    Ok(trace)
}

pub fn write_trace_file(trace: &PowerTrace, path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(path.as_ref(), serialize_trace(trace).as_bytes())
}

pub fn read_trace_file(path: impl AsRef<Path>) -> Result<PowerTrace> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    parse_trace(&text)
}
