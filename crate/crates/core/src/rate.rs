//! Fixed-point packet rates.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Sub};

/// Packets per second in unsigned 16.8 binary fixed point.
///
/// Sums are exact, which is what keeps the per-parent aggregation free of
/// rounding drift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(u32);

impl Rate {
    pub const FRAC_BITS: u32 = 8;
    pub const ONE: u32 = 1 << Self::FRAC_BITS;
    /// Largest representable value: 2^24 - 1 raw units.
    pub const MAX_RAW: u32 = (1 << 24) - 1;
    pub const ZERO: Rate = Rate(0);

    pub const fn from_raw(raw: u32) -> Rate {
        Rate(raw)
    }

    pub const fn raw(self) -> u32 {
        self.0
    }

    /// Nearest representable rate; negative and NaN inputs map to zero.
    pub fn from_pps(pps: f64) -> Rate {
        if pps.is_nan() || pps <= 0.0 {
            return Rate::ZERO;
        }
        let raw = (pps * f64::from(Self::ONE)).round();
        Rate(raw.min(f64::from(Self::MAX_RAW)) as u32)
    }

    /// Whole packets per second, exact.
    pub const fn from_int(pps: u32) -> Rate {
        Rate(pps << Self::FRAC_BITS)
    }

    pub fn as_pps(self) -> f64 {
        f64::from(self.0) / f64::from(Self::ONE)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplies by `factor`, rounding toward zero.
    pub fn mul_floor(self, factor: f64) -> Rate {
        if factor.is_nan() || factor <= 0.0 {
            return Rate::ZERO;
        }
        let raw = (f64::from(self.0) * factor).floor();
        Rate(raw.min(f64::from(Self::MAX_RAW)) as u32)
    }

    /// Multiplies by `factor`, rounding away from zero.
    pub fn mul_ceil(self, factor: f64) -> Rate {
        if factor.is_nan() || factor <= 0.0 {
            return Rate::ZERO;
        }
        let raw = (f64::from(self.0) * factor).ceil();
        Rate(raw.min(f64::from(Self::MAX_RAW)) as u32)
    }

    /// Spacing between releases at this rate, in whole milliseconds rounded
    /// up so the realised rate never exceeds `self`. `None` for a zero rate.
    pub fn period_ms(self) -> Option<u64> {
        if self.0 == 0 {
            return None;
        }
        let num = 1000 * u64::from(Self::ONE);
        let raw = u64::from(self.0);
        Some(num.div_ceil(raw))
    }

    /// Spacing between releases in nanoseconds, rounded up.
    pub fn period_ns(self) -> Option<u64> {
        if self.0 == 0 {
            return None;
        }
        let num = 1_000_000_000 * u64::from(Self::ONE);
        Some(num.div_ceil(u64::from(self.0)))
    }
}

impl Add for Rate {
    type Output = Rate;
    fn add(self, rhs: Rate) -> Rate {
        Rate(self.0 + rhs.0)
    }
}

impl Sub for Rate {
    type Output = Rate;
    fn sub(self, rhs: Rate) -> Rate {
        Rate(self.0.saturating_sub(rhs.0))
    }
}

impl Sum for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        iter.fold(Rate::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Rate> for Rate {
    fn sum<I: Iterator<Item = &'a Rate>>(iter: I) -> Rate {
        iter.copied().sum()
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.as_pps())
    }
}
