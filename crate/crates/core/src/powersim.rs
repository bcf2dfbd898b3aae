//! Synthetic power-trace generation with known ground truth.
//!
//! Replaces the clamp/oscilloscope rig: a phase schedule plus per-phase
//! wattages produce a multi-channel voltage trace that `combine_channels`
//! inverts exactly, together with the noiseless step model it came from.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::PhaseSchedule;
use crate::steps::{Step, StepModel};
use crate::trace::{Channel, PowerTrace};

/// Power model of a simulated GPU: per-phase levels, sensor noise, and the
/// electrical constants of the measurement chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerModelSpec {
    /// Idle draw (watts); phases named "idle" use this level.
    pub idle_w: f64,
    /// Phase name to level in watts.
    #[serde(default)]
    pub phase_levels: BTreeMap<String, f64>,
    #[serde(default)]
    pub noise_sigma_w: f64,
    pub sample_period_s: f64,
    /// Fraction of power attributed to channel 1; the rest goes to channel 2.
    #[serde(default = "default_split")]
    pub channel_split: f64,
    #[serde(default = "default_gains")]
    pub gains_a_per_v: Vec<f64>,
    #[serde(default = "default_supply")]
    pub supply_volts: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_split() -> f64 {
    0.5
}
fn default_gains() -> Vec<f64> {
    vec![10.0, 10.0]
}
fn default_supply() -> f64 {
    12.0
}

impl PowerModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.idle_w >= 0.0) || self.phase_levels.values().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidParameter("phase levels must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.channel_split) {
            return Err(Error::InvalidParameter(format!(
                "channel split {} not in [0, 1]",
                self.channel_split
            )));
        }
        if !(self.sample_period_s > 0.0) {
            return Err(Error::InvalidParameter("sample period must be > 0".into()));
        }
        if !(self.noise_sigma_w >= 0.0) {
            return Err(Error::InvalidParameter("noise sigma must be >= 0".into()));
        }
        if self.gains_a_per_v.is_empty() || self.gains_a_per_v.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::InvalidParameter("gains must be positive".into()));
        }
        if !(self.supply_volts > 0.0) {
            return Err(Error::InvalidParameter("supply voltage must be > 0".into()));
        }
        Ok(())
    }

    pub fn level_of(&self, phase: &str) -> Result<f64> {
        if phase == "idle" {
            return Ok(self.idle_w);
        }
        self.phase_levels
            .get(phase)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown phase name '{phase}'")))
    }

    /// Channel split fractions, one per gain. With two channels the split
    /// goes `channel_split` to the first and the rest to the second; a
    /// single channel takes everything.
    fn splits(&self) -> Vec<f64> {
        match self.gains_a_per_v.len() {
            1 => vec![1.0],
            n => {
                let mut s = vec![0.0; n];
                s[0] = self.channel_split;
                s[1] = 1.0 - self.channel_split;
                s
            }
        }
    }
}

/// Simulate one acquisition: seeded Gaussian noise in watts on top of the
/// scheduled levels, converted to per-channel clamp volts.
///
/// Returns the trace and the noiseless ground-truth step model (adjacent
/// phases with equal levels are merged into one step).
pub fn simulate_trace(
    spec: &PowerModelSpec,
    schedule: &PhaseSchedule,
) -> Result<(PowerTrace, StepModel)> {
    spec.validate()?;
    schedule.validate()?;
    if schedule.phases.is_empty() {
        return Err(Error::InvalidSchedule("empty schedule".into()));
    }
    for p in &schedule.phases {
        spec.level_of(&p.name)?;
    }

    let t0 = schedule.start_s();
    let end = schedule.end_s();
    let dt = spec.sample_period_s;
    let n = ((end - t0) / dt).round() as usize;
    if n < 2 {
        return Err(Error::InvalidSchedule("schedule shorter than two samples".into()));
    }

    let mut ground_steps: Vec<Step> = Vec::new();
    for p in &schedule.phases {
        let level = spec.level_of(&p.name)?;
        match ground_steps.last() {
            Some(prev) if prev.level_w == level => {}
            _ => ground_steps.push(Step { start_s: p.start_s, level_w: level }),
        }
    }
    let ground_truth = StepModel { steps: ground_steps, end_s: end };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let normal = Normal::new(0.0, spec.noise_sigma_w.max(f64::MIN_POSITIVE)).unwrap();
    let splits = spec.splits();
    let mut channels: Vec<Channel> = spec
        .gains_a_per_v
        .iter()
        .map(|&g| Channel { gain_a_per_v: g, samples_v: Vec::with_capacity(n) })
        .collect();

    for i in 0..n {
        let t = t0 + i as f64 * dt;
        let mut watts = ground_truth.level_at(t);
        if spec.noise_sigma_w > 0.0 {
            watts += normal.sample(&mut rng);
        }
        for (ch, &split) in channels.iter_mut().zip(&splits) {
            // combine_channels multiplies by gain and supply, so this
            // inverts exactly.
            ch.samples_v
                .push(watts * split / (spec.supply_volts * ch.gain_a_per_v));
        }
    }

    let trace = PowerTrace {
        sample_period_s: dt,
        supply_volts: spec.supply_volts,
        t0_s: t0,
        channels,
    };
    trace.validate()?;
    Ok((trace, ground_truth))
}
