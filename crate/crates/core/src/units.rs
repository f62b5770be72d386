//! Unit-interval quantities and the utility scale.
//!
//! Every quantity the mechanism manipulates (beliefs, odds quotas, ticket
//! allocations, winning probabilities) lives in `[0, 1]`. Each gets its own
//! newtype so a quota can't be passed where a belief is expected.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

macro_rules! unit_interval {
    ($(#[$meta:meta])* $name:ident, $what:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
        #[serde(transparent)]
        pub struct $name(f64);

        impl $name {
            pub const ZERO: Self = Self(0.0);
            pub const ONE: Self = Self(1.0);

            pub fn new(value: f64) -> Result<Self> {
                if (0.0..=1.0).contains(&value) {
                    Ok(Self(value))
                } else {
                    Err(Error::OutOfUnitInterval { what: $what, value })
                }
            }

            /// Clamps a computed value back into `[0, 1]`. Only for values
            /// that are in range up to rounding; NaN maps to zero.
            pub fn saturating(value: f64) -> Self {
                if value.is_nan() {
                    Self(0.0)
                } else {
                    Self(value.clamp(0.0, 1.0))
                }
            }

            #[inline]
            pub fn get(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<f64> for $name {
            type Error = Error;

            fn try_from(value: f64) -> Result<Self> {
                Self::new(value)
            }
        }

        impl From<$name> for f64 {
            fn from(value: $name) -> f64 {
                value.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
                let value = f64::deserialize(deserializer)?;
                Self::new(value).map_err(serde::de::Error::custom)
            }
        }
    };
}

unit_interval!(
    /// A probability level for the event.
    Probability,
    "probability"
);

unit_interval!(
    /// Multiplier applied to tickets bet on the event. `1 - q` acts as the
    /// probability threshold against which beliefs are compared.
    OddsQuota,
    "odds quota"
);

unit_interval!(
    /// Share of lottery tickets bet on the event; the rest go on the complement.
    MixingChoice,
    "mixing choice"
);

unit_interval!(
    /// Winning probability of the lottery induced by a mixing bet.
    Score,
    "score"
);

impl OddsQuota {
    /// The quota whose threshold `1 - q` equals `v`.
    pub fn from_threshold(v: Probability) -> Self {
        OddsQuota::saturating(1.0 - v.get())
    }

    /// The threshold `1 - q`.
    #[inline]
    pub fn threshold(self) -> f64 {
        1.0 - self.0
    }
}

/// Utilities of the two outcomes of a binarized bet: `u(0)` and the spread
/// `u(w) - u(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScale")]
pub struct UtilityScale {
    u0: f64,
    u_delta: f64,
}

#[derive(Deserialize)]
struct RawScale {
    u0: f64,
    u_delta: f64,
}

impl TryFrom<RawScale> for UtilityScale {
    type Error = Error;

    fn try_from(raw: RawScale) -> Result<Self> {
        UtilityScale::from_delta(raw.u0, raw.u_delta)
    }
}

impl Default for UtilityScale {
    fn default() -> Self {
        Self { u0: 0.0, u_delta: 1.0 }
    }
}

impl UtilityScale {
    /// From the utility of nothing and the utility of the prize.
    pub fn new(u0: f64, uw: f64) -> Result<Self> {
        Self::from_delta(u0, uw - u0)
    }

    pub fn from_delta(u0: f64, u_delta: f64) -> Result<Self> {
        if !u0.is_finite() || !u_delta.is_finite() {
            return Err(Error::InvalidScale(format!("non-finite utilities (u0 = {u0}, u_delta = {u_delta})")));
        }
        if u_delta <= 0.0 {
            return Err(Error::InvalidScale(format!("prize must be strictly preferred, got u_delta = {u_delta}")));
        }
        Ok(Self { u0, u_delta })
    }

    #[inline]
    pub fn u0(&self) -> f64 {
        self.u0
    }

    #[inline]
    pub fn uw(&self) -> f64 {
        self.u0 + self.u_delta
    }

    #[inline]
    pub fn u_delta(&self) -> f64 {
        self.u_delta
    }

    /// Applies the positive affine map `u -> alpha * u + beta`.
    pub fn transformed(&self, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidScale(format!("affine factor must be positive, got {alpha}")));
        }
        Self::from_delta(alpha * self.u0 + beta, alpha * self.u_delta)
    }
}

/// Closed interval `[a, b]` of relevant probability levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct BeliefInterval {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    a: f64,
    b: f64,
}

impl TryFrom<RawInterval> for BeliefInterval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        BeliefInterval::new(raw.a, raw.b)
    }
}

impl BeliefInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a <= b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidInterval { a, b })
        }
    }

    pub fn point(p: Probability) -> Self {
        Self { a: p.get(), b: p.get() }
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.a <= p && p <= self.b
    }

    /// True when the interval is not a single point.
    pub fn is_ambiguous(&self) -> bool {
        self.a < self.b
    }

    /// Whether `self` lies inside `outer`, allowing `tol` slack at each end.
    pub fn is_within(&self, outer: &BeliefInterval, tol: f64) -> bool {
        self.a >= outer.a - tol && self.b <= outer.b + tol
    }

    /// Hausdorff distance between two intervals.
    pub fn hausdorff(&self, other: &BeliefInterval) -> f64 {
        (self.a - other.a).abs().max((self.b - other.b).abs())
    }
}

impl fmt::Display for BeliefInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_rejects_out_of_range() {
        assert!(Probability::new(-0.01).is_err());
        assert!(OddsQuota::new(1.5).is_err());
        assert!(MixingChoice::new(f64::NAN).is_err());
        assert_eq!(Score::new(1.0).unwrap().get(), 1.0);
    }

    #[test]
    fn deserialize_validates() {
        assert!(serde_json::from_str::<Probability>("0.4").is_ok());
        assert!(serde_json::from_str::<Probability>("1.4").is_err());
        assert!(serde_json::from_str::<UtilityScale>(r#"{"u0":0,"u_delta":-1}"#).is_err());
        assert!(serde_json::from_str::<BeliefInterval>(r#"{"a":0.8,"b":0.1}"#).is_err());
    }

    #[test]
    fn scale_requires_strict_preference() {
        assert!(UtilityScale::new(1.0, 1.0).is_err());
        let s = UtilityScale::new(2.0, 5.0).unwrap();
        assert_eq!(s.u_delta(), 3.0);
        assert_eq!(s.uw(), 5.0);
        let t = s.transformed(2.0, 1.0).unwrap();
        assert_eq!((t.u0(), t.uw()), (5.0, 11.0));
    }

    #[test]
    fn interval_helpers() {
        let b = BeliefInterval::new(0.2, 0.4).unwrap();
        assert!(b.is_ambiguous());
        assert!((b.midpoint() - 0.3).abs() < 1e-15);
        assert!(BeliefInterval::new(0.25, 0.35).unwrap().is_within(&b, 0.0));
        assert!(!BeliefInterval::point(Probability::new(0.3).unwrap()).is_ambiguous());
        let c = BeliefInterval::new(0.1, 0.45).unwrap();
        assert!((b.hausdorff(&c) - 0.1).abs() < 1e-15);
    }
}
