//! Integer-nanosecond durations.
//!
//! Simulated time is accumulated in whole nanoseconds so that phase
//! accounting identities hold exactly. Analytic code works in floating
//! point microseconds via [`Nanos::as_micros`].

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Nanos(pub u64);

impl Nanos {
    pub const ZERO: Nanos = Nanos(0);

    pub fn from_micros(us: u64) -> Self {
        Nanos(us * 1_000)
    }

    pub fn from_millis(ms: u64) -> Self {
        Nanos(ms * 1_000_000)
    }

    /// Converts a floating microsecond value, rejecting values that are not
    /// a whole number of nanoseconds.
    pub fn try_from_micros_f64(name: &'static str, us: f64) -> Result<Self> {
        if !us.is_finite() || us < 0.0 {
            return Err(invalid(name, format!("{us} µs is not a finite nonnegative duration")));
        }
        let ns = us * 1_000.0;
        let rounded = ns.round();
        if (ns - rounded).abs() > 1e-6 * ns.max(1.0) || rounded > u64::MAX as f64 {
            return Err(invalid(name, format!("{us} µs is not a whole number of nanoseconds")));
        }
        Ok(Nanos(rounded as u64))
    }

    pub fn as_micros(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Nanos {
    type Output = Nanos;
    fn add(self, rhs: Nanos) -> Nanos {
        Nanos(self.0 + rhs.0)
    }
}

impl AddAssign for Nanos {
    fn add_assign(&mut self, rhs: Nanos) {
        self.0 += rhs.0;
    }
}

impl Sub for Nanos {
    type Output = Nanos;
    fn sub(self, rhs: Nanos) -> Nanos {
        Nanos(self.0 - rhs.0)
    }
}

impl Mul<u64> for Nanos {
    type Output = Nanos;
    fn mul(self, rhs: u64) -> Nanos {
        Nanos(self.0 * rhs)
    }
}

impl Sum for Nanos {
    fn sum<I: Iterator<Item = Nanos>>(iter: I) -> Nanos {
        iter.fold(Nanos::ZERO, Add::add)
    }
}

impl fmt::Display for Nanos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} µs", self.as_micros())
    }
}
