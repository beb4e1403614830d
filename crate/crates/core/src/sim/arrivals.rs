//! Lorry arrival processes.
//!
//! Piecewise-rate arrivals are generated by thinning: candidates arrive at
//! the peak rate and each is kept with probability `factor(t)/peak`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::uniform;
use super::variates::exponential;
use crate::{Error, Result};

const AVERAGE_TOLERANCE: f64 = 1e-6;

/// Rate multiplier on `[start, end)` hours within the profile's period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBlock {
    pub start: f64,
    pub end: f64,
    pub factor: f64,
}

/// Shape of the arrival rate over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalProfile {
    Homogeneous,
    /// Blocks tile `[0, period_hours)` and repeat. A 24-hour period gives a
    /// daily pattern, 168 a weekly one, 8,760 a seasonal one.
    Piecewise {
        period_hours: f64,
        blocks: Vec<RateBlock>,
    },
}

impl ArrivalProfile {
    pub fn validate(&self) -> Result<()> {
        let ArrivalProfile::Piecewise {
            period_hours,
            blocks,
        } = self
        else {
            return Ok(());
        };
        let bad = |message: String| Error::Config {
            path: "arrivals.blocks".into(),
            message,
        };
        if !(*period_hours > 0.0) {
            return Err(bad(format!("period {period_hours} must be positive")));
        }
        if blocks.is_empty() {
            return Err(bad("no rate blocks".into()));
        }
        let mut cursor = 0.0;
        let mut weighted = 0.0;
        for block in blocks {
            if (block.start - cursor).abs() > 1e-9 || !(block.end > block.start) {
                return Err(bad(format!(
                    "blocks must tile [0, {period_hours}) in order; found [{}, {})",
                    block.start, block.end
                )));
            }
            if !(block.factor >= 0.0) {
                return Err(bad(format!("negative rate factor {}", block.factor)));
            }
            weighted += block.factor * (block.end - block.start);
            cursor = block.end;
        }
        if (cursor - period_hours).abs() > 1e-9 {
            return Err(bad(format!(
                "blocks end at {cursor}, period is {period_hours}"
            )));
        }
        let average = weighted / period_hours;
        if (average - 1.0).abs() > AVERAGE_TOLERANCE {
            return Err(bad(format!("rate factors average {average}, expected 1")));
        }
        Ok(())
    }

    pub fn factor_at(&self, t: f64) -> f64 {
        match self {
            ArrivalProfile::Homogeneous => 1.0,
            ArrivalProfile::Piecewise {
                period_hours,
                blocks,
            } => {
                let phase = t.rem_euclid(*period_hours);
                blocks
                    .iter()
                    .find(|b| phase < b.end)
                    .or(blocks.last())
                    .map_or(1.0, |b| b.factor)
            }
        }
    }

    pub fn peak_factor(&self) -> f64 {
        match self {
            ArrivalProfile::Homogeneous => 1.0,
            ArrivalProfile::Piecewise { blocks, .. } => {
                blocks.iter().map(|b| b.factor).fold(0.0, f64::max)
            }
        }
    }

    /// Two-level daily pattern with the busy window starting at
    /// `peak_start` hours.
    pub fn daily_peak(peak_start: f64, peak_hours: f64, peak_factor: f64) -> Result<Self> {
        let off_factor = (24.0 - peak_factor * peak_hours) / (24.0 - peak_hours);
        let peak_end = peak_start + peak_hours;
        let mut blocks = Vec::with_capacity(3);
        if peak_start > 0.0 {
            blocks.push(RateBlock {
                start: 0.0,
                end: peak_start,
                factor: off_factor,
            });
        }
        blocks.push(RateBlock {
            start: peak_start,
            end: peak_end,
            factor: peak_factor,
        });
        if peak_end < 24.0 {
            blocks.push(RateBlock {
                start: peak_end,
                end: 24.0,
                factor: off_factor,
            });
        }
        let profile = ArrivalProfile::Piecewise {
            period_hours: 24.0,
            blocks,
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// Arrival process at `base_rate` lorries per hour, modulated by a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProcess {
    pub base_rate: f64,
    pub profile: ArrivalProfile,
}

impl ArrivalProcess {
    pub fn homogeneous(base_rate: f64) -> Self {
        ArrivalProcess {
            base_rate,
            profile: ArrivalProfile::Homogeneous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_rate > 0.0) || !self.base_rate.is_finite() {
            return Err(Error::Config {
                path: "arrivals.base_rate".into(),
                message: format!("rate {} must be positive", self.base_rate),
            });
        }
        self.profile.validate()
    }

    /// Time of the next arrival after `now`. Returns infinity if the profile
    /// never admits arrivals.
    pub fn next_arrival<R: Rng + ?Sized>(&self, now: f64, rng: &mut R) -> f64 {
        let peak = self.profile.peak_factor();
        if !(peak > 0.0) {
            return f64::INFINITY;
        }
        let candidate_rate = self.base_rate * peak;
        let mut t = now;
        loop {
            t += exponential(candidate_rate, uniform(rng));
            let factor = self.profile.factor_at(t);
            // No acceptance draw at the peak factor.
            if factor >= peak || uniform(rng) * peak < factor {
                return t;
            }
        }
    }
}
