//! Fixed-point simulation clock with microsecond resolution.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

pub const MICROS_PER_SEC: u64 = 1_000_000;

/// Simulated time in whole microseconds since the start of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * MICROS_PER_SEC)
    }

    /// Rounds to the nearest microsecond. Negative and NaN inputs clamp to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if s.is_nan() || s <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((s * MICROS_PER_SEC as f64).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// Always six decimals, e.g. `10.000001`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:06}",
            self.0 / MICROS_PER_SEC,
            self.0 % MICROS_PER_SEC
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTimeError(pub String);

impl fmt::Display for ParseTimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid time {:?}", self.0)
    }
}

impl std::error::Error for ParseTimeError {}

/// Exact decimal parse; at most six fractional digits are accepted.
impl FromStr for SimTime {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError(s.to_string());
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || frac.len() > 6 {
            return Err(err());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let secs: u64 = whole.parse().map_err(|_| err())?;
        let mut micros = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            micros += u64::from(b - b'0') * 10u64.pow(5 - i as u32);
        }
        secs.checked_mul(MICROS_PER_SEC)
            .and_then(|us| us.checked_add(micros))
            .map(SimTime)
            .ok_or_else(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_six_decimals() {
        assert_eq!(SimTime::from_micros(10_000_001).to_string(), "10.000001");
        assert_eq!(SimTime::from_secs(12).to_string(), "12.000000");
        assert_eq!(SimTime::ZERO.to_string(), "0.000000");
    }

    #[test]
    fn parse_accepts_short_fractions() {
        assert_eq!(
            "12.5".parse::<SimTime>().unwrap(),
            SimTime::from_millis(12_500)
        );
        assert_eq!("7".parse::<SimTime>().unwrap(), SimTime::from_secs(7));
        assert!("1.0000001".parse::<SimTime>().is_err());
        assert!("-1.0".parse::<SimTime>().is_err());
        assert!(".5".parse::<SimTime>().is_err());
    }

    #[test]
    fn float_conversion_rounds() {
        assert_eq!(SimTime::from_secs_f64(0.00112), SimTime::from_micros(1120));
        assert_eq!(SimTime::from_secs_f64(-3.0), SimTime::ZERO);
    }
}
