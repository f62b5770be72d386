//! Optimal mixing choices.
//!
//! Every best response is set-valued: SEU agents are indifferent over all of
//! `[0, 1]` at `v = 1 - q = p`, and maxmin agents have flat stretches at
//! `v = a` and `v = b`. Throughout, `v = 1 - q` is the probability threshold
//! at which the event bet and the complement bet are worth the same.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::distribution::SecondOrderDistribution;
use crate::error::{Error, Result};
use crate::model::{model_value, second_order_panels, worst_case_belief, PreferenceModel};
use crate::optimize::{argmax_from_slope, golden_section_max};
use crate::phi::SecondOrderUtility;
use crate::units::{BeliefInterval, MixingChoice, OddsQuota, Probability, UtilityScale};

/// Tolerance for exact ties in closed-form cases.
pub const CLOSED_FORM_TIE: f64 = 1e-12;
/// Tolerance on normalized slopes in numeric cases.
const NUMERIC_FLAT: f64 = 1e-12;
/// Relative tolerance for ties among oracle grid values.
const ORACLE_TIE: f64 = 1e-12;
/// Offset used to confirm a stationary point from both sides.
const STATIONARY_PROBE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimalMixing {
    Point { x: MixingChoice },
    Range { lo: MixingChoice, hi: MixingChoice },
    All,
}

impl OptimalMixing {
    pub fn point(x: f64) -> Self {
        OptimalMixing::Point { x: MixingChoice::saturating(x) }
    }

    /// Closed interval of optimal allocations; a degenerate range is a point.
    pub fn range(lo: f64, hi: f64) -> Self {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        if lo == hi {
            Self::point(lo)
        } else {
            OptimalMixing::Range { lo: MixingChoice::saturating(lo), hi: MixingChoice::saturating(hi) }
        }
    }

    /// Smallest and largest optimal allocation.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            OptimalMixing::Point { x } => (x.get(), x.get()),
            OptimalMixing::Range { lo, hi } => (lo.get(), hi.get()),
            OptimalMixing::All => (0.0, 1.0),
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        let (lo, hi) = self.bounds();
        x >= lo - tol && x <= hi + tol
    }

    /// Single representative allocation: the point, the midpoint of a
    /// range, or the hedge `1 - q` under full indifference.
    pub fn canonical(&self, q: OddsQuota) -> MixingChoice {
        match *self {
            OptimalMixing::Point { x } => x,
            OptimalMixing::Range { lo, hi } => MixingChoice::saturating(0.5 * (lo.get() + hi.get())),
            OptimalMixing::All => MixingChoice::saturating(1.0 - q.get()),
        }
    }
}

pub fn best_response_seu(p: Probability, q: OddsQuota) -> OptimalMixing {
    let (p, v) = (p.get(), 1.0 - q.get());
    if (p - v).abs() <= CLOSED_FORM_TIE {
        OptimalMixing::All
    } else if p > v {
        OptimalMixing::point(1.0)
    } else {
        OptimalMixing::point(0.0)
    }
}

pub fn best_response_maxmin(beliefs: BeliefInterval, q: OddsQuota) -> OptimalMixing {
    let (a, b) = (beliefs.lower(), beliefs.upper());
    if !beliefs.is_ambiguous() {
        return best_response_seu(Probability::saturating(a), q);
    }
    let v = 1.0 - q.get();
    if (v - a).abs() <= CLOSED_FORM_TIE {
        // Worst case is p = a for x >= a, where the value no longer depends on x.
        OptimalMixing::range(a, 1.0)
    } else if (v - b).abs() <= CLOSED_FORM_TIE {
        OptimalMixing::range(0.0, b)
    } else if v < a {
        OptimalMixing::point(1.0)
    } else if v > b {
        OptimalMixing::point(0.0)
    } else {
        OptimalMixing::point(v)
    }
}

/// Best response of a variational agent whose belief interval is the
/// cost's domain.
///
/// By the envelope theorem the value's slope in `x` is
/// `u_delta * (p*(x) - v)` with `p*(x)` the worst-case belief, which is
/// non-increasing in `x`; the argmax is read off that slope. When the
/// worst case at the hedge threshold is interior, the stationary point
/// `v - c'(v) / u_delta` is available in closed form and is accepted once
/// the slope confirms it.
pub fn best_response_variational(cost: &CostFunction, q: OddsQuota, scale: &UtilityScale) -> Result<OptimalMixing> {
    let domain = cost.domain();
    let (a, b) = (domain.lower(), domain.upper());
    let q = q.get();
    let v = 1.0 - q;
    if v < a - CLOSED_FORM_TIE {
        return Ok(OptimalMixing::point(1.0));
    }
    if v > b + CLOSED_FORM_TIE {
        return Ok(OptimalMixing::point(0.0));
    }
    let u_delta = scale.u_delta();
    let slope = |x: f64| worst_case_belief(cost, x, q, u_delta) - v;

    if a < v && v < b {
        let candidate = v - cost.d1(v) / u_delta;
        if (0.0..=1.0).contains(&candidate) {
            let left = (candidate - STATIONARY_PROBE).max(0.0);
            let right = (candidate + STATIONARY_PROBE).min(1.0);
            if slope(left) >= -NUMERIC_FLAT && slope(right) <= NUMERIC_FLAT {
                return Ok(OptimalMixing::point(candidate));
            }
        }
    }
    match argmax_from_slope(slope, NUMERIC_FLAT) {
        Some(r) => Ok(r),
        None => {
            let m = PreferenceModel::variational(cost.clone());
            golden_fallback(&m, OddsQuota::saturating(q), scale)
        }
    }
}

/// Best response of a smooth second-order agent.
///
/// The first-order condition `E[phi'(u(s(x, p))) (p - v)] = 0` is evaluated
/// with weights `phi'` rescaled by their maximum in log space, so that large
/// utility spreads do not underflow every weight to zero.
pub fn best_response_second_order(
    distribution: &SecondOrderDistribution,
    phi: &SecondOrderUtility,
    q: OddsQuota,
    scale: &UtilityScale,
) -> Result<OptimalMixing> {
    let support = distribution.support();
    let q = q.get();
    let v = 1.0 - q;
    // With every relevant p above v, phi is increasing in x almost surely.
    if v < support.lower() - CLOSED_FORM_TIE {
        return Ok(OptimalMixing::point(1.0));
    }
    if v > support.upper() + CLOSED_FORM_TIE {
        return Ok(OptimalMixing::point(0.0));
    }
    let panels = second_order_panels(distribution, phi, scale, v.max(1.0 - v));
    let nodes = distribution.nodes(panels);
    let (u0, u_delta) = (scale.u0(), scale.u_delta());
    let mut logs = vec![0.0; nodes.len()];
    let slope = |x: f64| {
        let mut top = f64::NEG_INFINITY;
        for (l, (p, _)) in logs.iter_mut().zip(&nodes) {
            let s = x * q * p + (1.0 - x) * (1.0 - q) * (1.0 - p);
            *l = phi.log_d1(u0 + u_delta * s);
            top = top.max(*l);
        }
        let mut total = 0.0;
        for (l, (p, w)) in logs.iter().zip(&nodes) {
            total += w * (l - top).exp() * (p - v);
        }
        total
    };
    // `slope` needs mutable scratch space; wrap it for the Fn-based maximizer.
    let cell = std::cell::RefCell::new(slope);
    match argmax_from_slope(|x| (cell.borrow_mut())(x), NUMERIC_FLAT) {
        Some(r) => Ok(r),
        None => {
            let m = PreferenceModel::second_order(distribution.clone(), phi.clone());
            golden_fallback(&m, OddsQuota::saturating(q), scale)
        }
    }
}

fn golden_fallback(m: &PreferenceModel, q: OddsQuota, scale: &UtilityScale) -> Result<OptimalMixing> {
    let failure = std::cell::RefCell::new(None);
    let x = golden_section_max(|x| match model_value(m, MixingChoice::saturating(x), q, scale) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        }
    });
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(OptimalMixing::Point { x }),
    }
}

/// Dispatch on the representation.
pub fn best_response(m: &PreferenceModel, q: OddsQuota, scale: &UtilityScale) -> Result<OptimalMixing> {
    match m {
        PreferenceModel::Seu { p } => Ok(best_response_seu(*p, q)),
        PreferenceModel::Maxmin { beliefs } => Ok(best_response_maxmin(*beliefs, q)),
        PreferenceModel::Variational { cost } => best_response_variational(cost, q, scale),
        PreferenceModel::SecondOrder { distribution, phi } => best_response_second_order(distribution, phi, q, scale),
        PreferenceModel::ProbSoph { .. } => {
            Err(Error::UnsupportedModel("continuous mixing is undefined for prob-soph"))
        }
    }
}

/// Brute-force best response: evaluates the model on the grid
/// `{0, step, ..., 1}` and returns the grid maximizers. Grid values within a
/// relative `1e-12` of the best count as ties.
pub fn oracle_best_response(
    m: &PreferenceModel,
    q: OddsQuota,
    scale: &UtilityScale,
    grid_step: f64,
) -> Result<OptimalMixing> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::InvalidGrid(format!("grid step must lie in (0, 0.1], got {grid_step}")));
    }
    let n = (1.0 / grid_step).round() as usize;
    let values = (0..=n)
        .map(|i| model_value(m, MixingChoice::saturating(i as f64 / n as f64), q, scale))
        .collect::<Result<Vec<_>>>()?;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = ORACLE_TIE * best.abs();
    let first = values.iter().position(|v| *v >= best - tol).unwrap_or(0);
    let last = values.iter().rposition(|v| *v >= best - tol).unwrap_or(n);
    Ok(OptimalMixing::range(first as f64 / n as f64, last as f64 / n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCurveEntry {
    pub q: OddsQuota,
    pub response: OptimalMixing,
    pub canonical_x: MixingChoice,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MixingCurve {
    pub entries: Vec<MixingCurveEntry>,
}

impl MixingCurve {
    /// CSV with columns `q, x_lo, x_hi, canonical_x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,x_lo,x_hi,canonical_x\n");
        for e in &self.entries {
            let (lo, hi) = e.response.bounds();
            let _ = writeln!(out, "{},{},{},{}", e.q, lo, hi, e.canonical_x);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub fn mixing_curve(m: &PreferenceModel, q_grid: &[OddsQuota], scale: &UtilityScale) -> Result<MixingCurve> {
    if q_grid.windows(2).any(|w| !(w[0].get() < w[1].get())) {
        return Err(Error::InvalidGrid("odds grid must be strictly increasing".into()));
    }
    let entries = q_grid
        .iter()
        .map(|&q| {
            let response = best_response(m, q, scale)?;
            Ok(MixingCurveEntry { q, response, canonical_x: response.canonical(q) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixingCurve { entries })
}

/// `n + 1` evenly spaced odds quotas `{0, 1/n, ..., 1}`.
pub fn uniform_odds_grid(n: usize) -> Vec<OddsQuota> {
    let n = n.max(1);
    (0..=n).map(|i| OddsQuota::saturating(i as f64 / n as f64)).collect()
}
