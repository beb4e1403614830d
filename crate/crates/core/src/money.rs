use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// An amount of currency held as integer pence.
///
/// Serialized as whole pounds (the unit used in configuration files).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_pence(pence: i64) -> Self {
        Money(pence)
    }

    pub const fn from_pounds(pounds: i64) -> Self {
        Money(pounds * 100)
    }

    /// Converts a real-valued pound amount, rounding to the nearest penny
    /// (half away from zero).
    pub fn from_pounds_f64(pounds: f64) -> Self {
        Money((pounds * 100.0).round() as i64)
    }

    pub const fn pence(self) -> i64 {
        self.0
    }

    pub fn pounds_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Whole pounds, rounding half away from zero.
    pub fn whole_pounds(self) -> i64 {
        let sign = self.0.signum();
        let abs = self.0.abs();
        sign * ((abs + 50) / 100)
    }

    /// Whole pounds with thousands separators, e.g. `£60,416,667`.
    pub fn display_pounds(self) -> String {
        let pounds = self.whole_pounds();
        let digits = pounds.unsigned_abs().to_string();
        let mut grouped = String::with_capacity(digits.len() + digits.len() / 3);
        for (i, ch) in digits.chars().enumerate() {
            if i > 0 && (digits.len() - i) % 3 == 0 {
                grouped.push(',');
            }
            grouped.push(ch);
        }
        if pounds < 0 {
            format!("-£{grouped}")
        } else {
            format!("£{grouped}")
        }
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_pounds())
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl Serialize for Money {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0 % 100 == 0 {
            serializer.serialize_i64(self.0 / 100)
        } else {
            serializer.serialize_f64(self.pounds_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pounds = f64::deserialize(deserializer)?;
        if !pounds.is_finite() {
            return Err(serde::de::Error::custom("amount must be finite"));
        }
        Ok(Money::from_pounds_f64(pounds))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_pounds_rounds_half_away_from_zero() {
        assert_eq!(Money::from_pence(5_954_545_450).whole_pounds(), 59_545_455);
        assert_eq!(Money::from_pence(149).whole_pounds(), 1);
        assert_eq!(Money::from_pence(150).whole_pounds(), 2);
        assert_eq!(Money::from_pence(-150).whole_pounds(), -2);
    }

    #[test]
    fn thousands_separators() {
        assert_eq!(Money::from_pounds(60_416_667).to_string(), "£60,416,667");
        assert_eq!(Money::from_pounds(0).to_string(), "£0");
        assert_eq!(Money::from_pounds(-1_000).to_string(), "-£1,000");
        assert_eq!(Money::from_pounds(999).to_string(), "£999");
    }

    #[test]
    fn serde_uses_pounds() {
        let m: Money = serde_json::from_str("5000000").unwrap();
        assert_eq!(m, Money::from_pounds(5_000_000));
        assert_eq!(serde_json::to_string(&m).unwrap(), "5000000");
    }
}
