//! The binarized mixing-bet score.
//!
//! A mixing bet with allocation `x` and odds quota `q` pays the prize when a
//! uniform draw `r` falls at or below `x q` (event realized) or
//! `(1 - x)(1 - q)` (complement realized). Because the payout is a lottery,
//! expected utility is affine in the expected score whatever the curvature
//! of `u`.

use crate::units::{MixingChoice, OddsQuota, Probability, Score, UtilityScale};

/// Winning probability of the bet once the event has been resolved.
pub fn score(x: MixingChoice, q: OddsQuota, event_realized: bool) -> Score {
    let (x, q) = (x.get(), q.get());
    if event_realized {
        Score::saturating(x * q)
    } else {
        Score::saturating((1.0 - x) * (1.0 - q))
    }
}

/// Winning probability averaged over the event with belief `p`.
pub fn expected_score(x: MixingChoice, q: OddsQuota, p: Probability) -> Score {
    Score::saturating(expected_score_raw(x.get(), q.get(), p.get()))
}

/// `p x q + (1 - p)(1 - x)(1 - q)`, unchecked.
#[inline]
pub(crate) fn expected_score_raw(x: f64, q: f64, p: f64) -> f64 {
    p * x * q + (1.0 - p) * (1.0 - x) * (1.0 - q)
}

/// Utility of a lottery that pays the prize with probability `s`.
pub fn binarized_value(s: Score, scale: &UtilityScale) -> f64 {
    s.get() * scale.u_delta() + scale.u0()
}
