//! Real-time intervals attached to the temporal operators.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("lower bound {0} is not a finite number")]
    NonFiniteLower(f64),
    #[error("upper bound {0} is not a number")]
    NanUpper(f64),
    #[error("lower bound {0} is negative")]
    NegativeLower(f64),
    #[error("lower bound {lower} exceeds upper bound {upper}")]
    Inverted { lower: f64, upper: f64 },
    #[error("singleton interval at {0} must have both bounds closed")]
    EmptySingleton(f64),
    #[error("negative time shift {0}: timestamps must be non-decreasing")]
    NegativeShift(f64),
}

/// An interval of the real line with independently open or closed bounds.
///
/// An infinite upper bound is always treated as open. Intervals obtained from
/// user input have a non-negative lower bound; intervals obtained by
/// [`Interval::shift`] may reach below zero.
#[derive(Debug, Clone, Copy)]
pub struct Interval {
    lower: f64,
    lower_closed: bool,
    upper: f64,
    upper_closed: bool,
}

impl Interval {
    /// `[0, inf)`, the default interval of every temporal operator.
    pub const UNBOUNDED: Interval = Interval {
        lower: 0.0,
        lower_closed: true,
        upper: f64::INFINITY,
        upper_closed: false,
    };

    pub fn new(
        lower: f64,
        lower_closed: bool,
        upper: f64,
        upper_closed: bool,
    ) -> Result<Self, IntervalError> {
        if lower < 0.0 {
            return Err(IntervalError::NegativeLower(lower));
        }
        Self::unchecked_sign(lower, lower_closed, upper, upper_closed)
    }

    /// Like [`Interval::new`] but allows a negative lower bound.
    pub fn unchecked_sign(
        lower: f64,
        lower_closed: bool,
        upper: f64,
        upper_closed: bool,
    ) -> Result<Self, IntervalError> {
        if !lower.is_finite() {
            return Err(IntervalError::NonFiniteLower(lower));
        }
        if upper.is_nan() {
            return Err(IntervalError::NanUpper(upper));
        }
        if lower > upper {
            return Err(IntervalError::Inverted { lower, upper });
        }
        if lower == upper && !(lower_closed && upper_closed) {
            return Err(IntervalError::EmptySingleton(lower));
        }
        Ok(Self::raw(lower, lower_closed, upper, upper_closed))
    }

    fn raw(lower: f64, lower_closed: bool, upper: f64, upper_closed: bool) -> Self {
        // -0.0 and 0.0 must hash and compare alike.
        let lower = if lower == 0.0 { 0.0 } else { lower };
        let upper = if upper == 0.0 { 0.0 } else { upper };
        Interval {
            lower,
            lower_closed,
            upper,
            upper_closed: upper_closed && upper.is_finite(),
        }
    }

    /// `[lower, upper]`
    pub fn closed(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        Self::new(lower, true, upper, true)
    }

    /// `(lower, upper]`
    pub fn left_open(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        Self::new(lower, false, upper, true)
    }

    /// `[lower, upper)`
    pub fn right_open(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        Self::new(lower, true, upper, false)
    }

    /// `[lower, inf)`
    pub fn from(lower: f64) -> Result<Self, IntervalError> {
        Self::new(lower, true, f64::INFINITY, false)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn lower_closed(&self) -> bool {
        self.lower_closed
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn upper_closed(&self) -> bool {
        self.upper_closed
    }

    pub fn is_bounded(&self) -> bool {
        self.upper.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_closed {
            x >= self.lower
        } else {
            x > self.lower
        };
        let below = if self.upper_closed {
            x <= self.upper
        } else {
            x < self.upper
        };
        above && below
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// True when no non-negative real lies in the interval, so no future
    /// offset can ever fall inside it.
    pub fn is_expired(&self) -> bool {
        self.upper < 0.0 || (self.upper == 0.0 && !self.upper_closed)
    }

    /// Moves both bounds down by `delta`, keeping their openness.
    pub fn shift(&self, delta: f64) -> Result<Self, IntervalError> {
        if delta < 0.0 || delta.is_nan() {
            return Err(IntervalError::NegativeShift(delta));
        }
        Ok(Self::raw(
            self.lower - delta,
            self.lower_closed,
            self.upper - delta,
            self.upper_closed,
        ))
    }

    /// The same set of non-negative offsets, with a negative lower bound
    /// raised to a closed 0.
    pub fn clamp_to_future(&self) -> Self {
        if self.lower < 0.0 {
            Self::raw(0.0, true, self.upper, self.upper_closed)
        } else {
            *self
        }
    }

    fn key(&self) -> (u64, bool, u64, bool) {
        (
            self.lower.to_bits(),
            self.lower_closed,
            self.upper.to_bits(),
            self.upper_closed,
        )
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::UNBOUNDED
    }
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Interval {}

impl Hash for Interval {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lower
            .total_cmp(&other.lower)
            .then(self.lower_closed.cmp(&other.lower_closed))
            .then(self.upper.total_cmp(&other.upper))
            .then(self.upper_closed.cmp(&other.upper_closed))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_closed { '[' } else { '(' };
        if self.upper.is_finite() {
            let close = if self.upper_closed { ']' } else { ')' };
            write!(f, "{open}{},{}{close}", self.lower, self.upper)
        } else {
            write!(f, "{open}{},inf)", self.lower)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_both_bounds() {
        let i = Interval::closed(0.0, 10.0).unwrap();
        let s = i.shift(3.0).unwrap();
        assert_eq!(s, Interval::unchecked_sign(-3.0, true, 7.0, true).unwrap());

        let i = Interval::from(5.0).unwrap();
        assert_eq!(i.shift(0.0).unwrap(), i);

        let i = Interval::left_open(2.0, 8.0).unwrap();
        assert_eq!(
            i.shift(2.0).unwrap(),
            Interval::left_open(0.0, 6.0).unwrap()
        );
    }

    #[test]
    fn negative_shift_is_rejected() {
        let i = Interval::closed(0.0, 10.0).unwrap();
        assert_eq!(i.shift(-1.0), Err(IntervalError::NegativeShift(-1.0)));
    }

    #[test]
    fn zero_membership() {
        assert!(Interval::closed(0.0, 10.0).unwrap().contains_zero());
        assert!(!Interval::left_open(0.0, 10.0).unwrap().contains_zero());
        let shifted = Interval::closed(0.0, 10.0).unwrap().shift(3.0).unwrap();
        assert!(shifted.contains_zero());
    }

    #[test]
    fn malformed_bounds() {
        assert!(matches!(
            Interval::closed(5.0, 2.0),
            Err(IntervalError::Inverted { .. })
        ));
        assert_eq!(
            Interval::left_open(3.0, 3.0),
            Err(IntervalError::EmptySingleton(3.0))
        );
        assert!(Interval::closed(3.0, 3.0).is_ok());
        assert_eq!(
            Interval::closed(-1.0, 3.0),
            Err(IntervalError::NegativeLower(-1.0))
        );
    }

    #[test]
    fn infinite_upper_is_open() {
        let a = Interval::new(0.0, true, f64::INFINITY, true).unwrap();
        assert_eq!(a, Interval::UNBOUNDED);
        assert!(!a.upper_closed());
    }

    #[test]
    fn expiry() {
        let i = Interval::closed(0.0, 2.0).unwrap();
        assert!(!i.shift(2.0).unwrap().is_expired());
        assert!(i.shift(2.5).unwrap().is_expired());
        assert!(Interval::right_open(0.0, 2.0)
            .unwrap()
            .shift(2.0)
            .unwrap()
            .is_expired());
        assert!(!Interval::UNBOUNDED.shift(1e9).unwrap().is_expired());
    }

    #[test]
    fn display() {
        assert_eq!(Interval::UNBOUNDED.to_string(), "[0,inf)");
        assert_eq!(
            Interval::left_open(30.0, 60.0).unwrap().to_string(),
            "(30,60]"
        );
        assert_eq!(
            Interval::right_open(0.5, 2.0).unwrap().to_string(),
            "[0.5,2)"
        );
    }
}
