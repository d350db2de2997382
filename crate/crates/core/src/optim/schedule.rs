use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant learning-rate multiplier. Each breakpoint `(e, m)`
/// sets the multiplier to `m` from epoch `e` onward; before the first
/// breakpoint the multiplier is 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StepSchedule {
    breakpoints: Vec<(usize, f64)>,
}

impl StepSchedule {
    pub fn new(breakpoints: Vec<(usize, f64)>) -> Result<Self> {
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidConfig(format!(
                    "schedule epochs must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((_, m)) = breakpoints.iter().find(|(_, m)| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidConfig(format!("invalid schedule multiplier {m}")));
        }
        Ok(Self { breakpoints })
    }

    pub fn constant() -> Self {
        Self::default()
    }

    pub fn breakpoints(&self) -> &[(usize, f64)] {
        &self.breakpoints
    }

    pub fn multiplier(&self, epoch: usize) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(e, _)| *e <= epoch)
            .last()
            .map_or(1.0, |(_, m)| *m)
    }

    /// Same schedule with every breakpoint epoch multiplied by `factor`.
    pub fn stretched(&self, factor: usize) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().map(|(e, m)| (e * factor, *m)).collect(),
        }
    }
}

/// Multiplier applied to the learning rate at `epoch`.
pub fn apply_schedule(schedule: &StepSchedule, epoch: usize) -> f64 {
    schedule.multiplier(epoch)
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.breakpoints.iter().map(|(e, m)| format!("{e}:{m:?}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for StepSchedule {
    type Err = Error;

    /// `"60:0.2,120:0.04"`; the empty string is the constant schedule.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Self::constant());
        }
        let mut points = Vec::new();
        for part in s.split(',') {
            let (e, m) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidConfig(format!("bad schedule entry {part:?}")))?;
            let e = e
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad schedule epoch {e:?}")))?;
            let m = m
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad schedule multiplier {m:?}")))?;
            points.push((e, m));
        }
        Self::new(points)
    }
}

impl TryFrom<String> for StepSchedule {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StepSchedule> for String {
    fn from(s: StepSchedule) -> String {
        s.to_string()
    }
}
