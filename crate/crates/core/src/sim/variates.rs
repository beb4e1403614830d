use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Inverse-CDF sample of a triangular distribution on `[min, max]` with
/// peak at `mode`.
pub fn sample_triangular(min: f64, mode: f64, max: f64, u: f64) -> Result<f64> {
    if !(min <= mode && mode <= max) || !min.is_finite() || !max.is_finite() {
        return Err(Error::Config {
            path: "service_time".into(),
            message: format!("triangular needs min <= mode <= max, got ({min}, {mode}, {max})"),
        });
    }
    Ok(triangular_unchecked(min, mode, max, u.clamp(0.0, 1.0)))
}

#[inline]
fn triangular_unchecked(min: f64, mode: f64, max: f64, u: f64) -> f64 {
    let range = max - min;
    if range == 0.0 {
        return min;
    }
    let split = (mode - min) / range;
    if u <= split {
        min + (u * range * (mode - min)).sqrt()
    } else {
        max - ((1.0 - u) * range * (max - mode)).sqrt()
    }
}

/// Inverse-CDF exponential draw with the given rate.
#[inline]
pub fn exponential(rate: f64, u: f64) -> f64 {
    -(1.0 - u).ln() / rate
}

/// Delay spent at a station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceTime {
    Zero,
    /// Hours.
    Triangular {
        min: f64,
        mode: f64,
        max: f64,
    },
}

impl ServiceTime {
    pub fn is_zero(&self) -> bool {
        match *self {
            ServiceTime::Zero => true,
            ServiceTime::Triangular { max, .. } => max == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ServiceTime::Triangular { min, mode, max } = *self {
            sample_triangular(min, mode, max, 0.5)?;
            if min < 0.0 {
                return Err(Error::Config {
                    path: "service_time.min".into(),
                    message: "service time cannot be negative".into(),
                });
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ServiceTime::Zero => 0.0,
            ServiceTime::Triangular { min, mode, max } => (min + mode + max) / 3.0,
        }
    }

    /// Assumes [`validate`](Self::validate) passed.
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            ServiceTime::Zero => 0.0,
            ServiceTime::Triangular { min, mode, max } => triangular_unchecked(min, mode, max, u),
        }
    }
}
