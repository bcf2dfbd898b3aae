//! Named execution phases of a benchmark run.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub name: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl Phase {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Contiguous, non-overlapping named intervals covering one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseSchedule {
    pub phases: Vec<Phase>,
}

impl PhaseSchedule {
    pub fn new(phases: Vec<Phase>) -> Result<Self> {
        let s = PhaseSchedule { phases };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.phases {
            if !(p.end_s > p.start_s) {
                return Err(Error::InvalidSchedule(format!(
                    "phase '{}' has non-positive duration",
                    p.name
                )));
            }
        }
        for w in self.phases.windows(2) {
            if (w[1].start_s - w[0].end_s).abs() > 1e-12 {
                return Err(Error::InvalidSchedule(format!(
                    "gap or overlap between '{}' and '{}'",
                    w[0].name, w[1].name
                )));
            }
        }
        Ok(())
    }

    pub fn start_s(&self) -> f64 {
        self.phases.first().map_or(0.0, |p| p.start_s)
    }

    pub fn end_s(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.end_s)
    }

    /// First phase with the given name.
    pub fn phase(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }

    /// CSV with header `phase,start_s,end_s`, six fractional digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,start_s,end_s\n");
        for p in &self.phases {
            let _ = writeln!(out, "{},{:.6},{:.6}", p.name, p.start_s, p.end_s);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut phases = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line == "phase,start_s,end_s") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "expected 'phase,start_s,end_s'".into(),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad time value '{s}'"),
                })
            };
            phases.push(Phase {
                name: fields[0].to_string(),
                start_s: parse(fields[1])?,
                end_s: parse(fields[2])?,
            });
        }
        PhaseSchedule::new(phases)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::write_atomic(path.as_ref(), self.to_csv().as_bytes())
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule() -> PhaseSchedule {
        PhaseSchedule::new(vec![
            Phase { name: "idle".into(), start_s: 0.0, end_s: 1.0 },
            Phase { name: "kernel".into(), start_s: 1.0, end_s: 3.0 },
            Phase { name: "idle".into(), start_s: 3.0, end_s: 4.0 },
        ])
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let s = schedule();
        assert_eq!(PhaseSchedule::from_csv(&s.to_csv()).unwrap(), s);
    }

    #[test]
    fn csv_has_six_fraction_digits() {
        let line = schedule().to_csv();
        assert!(line.contains("idle,0.000000,1.000000"));
    }

    #[test]
    fn rejects_gaps_and_inverted_phases() {
        assert!(PhaseSchedule::new(vec![
            Phase { name: "a".into(), start_s: 0.0, end_s: 1.0 },
            Phase { name: "b".into(), start_s: 2.0, end_s: 3.0 },
        ])
        .is_err());
        assert!(PhaseSchedule::new(vec![Phase {
            name: "a".into(),
            start_s: 1.0,
            end_s: 1.0
        }])
        .is_err());
    }
}
