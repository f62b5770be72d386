//! One-dimensional maximization of concave functions on `[0, 1]`.
//!
//! The solvers know the objective's slope in closed form (an envelope
//! argument for variational preferences, a first-order condition for
//! second-order preferences), so the primary method works on the slope
//! alone: its sign pattern on a concave function pins down the whole argmax
//! set, flats included. Golden-section search on the value is the fallback
//! when the slope cannot be evaluated.

use crate::solver::OptimalMixing;
use crate::units::MixingChoice;

/// Argmax sets narrower than this are reported as a point.
pub const POINT_WIDTH: f64 = 1e-9;
pub const GOLDEN_MAX_ITER: usize = 200;
const BISECT_MAX_ITER: usize = 200;

/// Argmax set of a concave function on `[0, 1]` given its (non-increasing)
/// derivative. Slopes within `flat_tol` of zero count as flat.
///
/// Returns `None` if the slope is not finite somewhere it was evaluated.
pub fn argmax_from_slope<S: Fn(f64) -> f64>(slope: S, flat_tol: f64) -> Option<OptimalMixing> {
    let checked = |x: f64| {
        let s = slope(x);
        s.is_finite().then_some(s)
    };
    let s0 = checked(0.0)?;
    let s1 = checked(1.0)?;
    if s0.abs() <= flat_tol && s1.abs() <= flat_tol {
        return Some(OptimalMixing::All);
    }
    if s0 < -flat_tol {
        return Some(OptimalMixing::point(0.0));
    }
    if s1 > flat_tol {
        return Some(OptimalMixing::point(1.0));
    }
    // First x whose slope is no longer clearly positive.
    let left = if s0 <= flat_tol { 0.0 } else { bisect(&checked, |s| s <= flat_tol)? };
    // Last x whose slope is not yet clearly negative.
    let right = if s1 >= -flat_tol { 1.0 } else { bisect(&checked, |s| s < -flat_tol)? };
    let (left, right) = (left.min(right), left.max(right));
    if right - left <= POINT_WIDTH {
        Some(OptimalMixing::point(0.5 * (left + right)))
    } else {
        Some(OptimalMixing::range(left, right))
    }
}

/// Boundary of the region where `past` holds, assuming it is false at 0,
/// true at 1, and monotone in between.
fn bisect<C, P>(slope: &C, past: P) -> Option<f64>
where
    C: Fn(f64) -> Option<f64>,
    P: Fn(f64) -> bool,
{
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if past(slope(mid)?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the maximizer of a unimodal function on `[0, 1]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F) -> MixingChoice {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_MAX_ITER {
        if b - a <= POINT_WIDTH {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // Endpoints are never probed in the interior loop; check them directly.
    let mid = 0.5 * (a + b);
    let best = [(0.0, f(0.0)), (1.0, f(1.0)), (mid, f(mid))]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |acc, (x, v)| if v > acc.1 { (x, v) } else { acc });
    MixingChoice::saturating(best.0)
}
