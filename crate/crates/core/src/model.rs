//! Preference representations and the values they assign to mixing bets.
//!
//! After binarization a mixing bet is worth `u0 + u_delta * s` under any
//! belief `p`, where `s` is the expected score. The representations differ
//! only in how they aggregate over `p`:
//!
//! | model          | value of allocation `x` at quota `q`                    |
//! |----------------|---------------------------------------------------------|
//! | SEU            | `u(s(p))`                                               |
//! | maxmin         | `min_{p in [a,b]} u(s(p))`                              |
//! | variational    | `min_{p in [a,b]} u(s(p)) + c(p)`                       |
//! | second order   | `E_{p ~ P}[phi(u(s(p)))]`                               |
//! | prob. soph.    | `u0 + u_delta * w(P[win])`, choice triple only          |

use serde::{Deserialize, Serialize};

use crate::cost::{CostFunction, CostSpec};
use crate::distribution::{DistributionSpec, SecondOrderDistribution};
use crate::error::{Error, Result};
use crate::phi::{PhiSpec, SecondOrderUtility};
use crate::scoring::{binarized_value, expected_score_raw};
use crate::units::{BeliefInterval, MixingChoice, OddsQuota, Probability, Score, UtilityScale};
use crate::weighting::ProbWeighting;

/// Largest log-variation of an integrand handled by one 64-node panel.
const LOG_SPREAD_PER_PANEL: f64 = 60.0;
const MAX_PANELS: usize = 4096;

#[derive(Debug, Clone)]
pub enum PreferenceModel {
    Seu {
        p: Probability,
    },
    Maxmin {
        beliefs: BeliefInterval,
    },
    /// The belief interval is the cost function's domain.
    Variational {
        cost: CostFunction,
    },
    /// The belief interval is the distribution's support.
    SecondOrder {
        distribution: SecondOrderDistribution,
        phi: SecondOrderUtility,
    },
    ProbSoph {
        p: Probability,
        weighting: ProbWeighting,
    },
}

/// JSON form of a [`PreferenceModel`]: a `model` tag plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Seu { p: f64 },
    Maxmin { a: f64, b: f64 },
    Variational { a: f64, b: f64, cost: CostSpec },
    SecondOrder { distribution: DistributionSpec, phi: PhiSpec },
    ProbSoph { p: f64, weighting: ProbWeighting },
}

/// Values of betting on the event, on the complement, and hedging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleValues {
    pub event: f64,
    pub complement: f64,
    pub mix: f64,
}

/// One of the three acts of the restricted choice set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripleChoice {
    Event,
    Complement,
    Mix,
}

impl TripleChoice {
    pub fn allocation(self, q: OddsQuota) -> MixingChoice {
        match self {
            TripleChoice::Event => MixingChoice::ONE,
            TripleChoice::Complement => MixingChoice::ZERO,
            TripleChoice::Mix => MixingChoice::saturating(1.0 - q.get()),
        }
    }
}

impl TripleValues {
    /// Strict maximum; ties within `tol` return `None`.
    pub fn strict_best(&self, tol: f64) -> Option<TripleChoice> {
        let (e, c, m) = (self.event, self.complement, self.mix);
        if e > c + tol && e > m + tol {
            Some(TripleChoice::Event)
        } else if c > e + tol && c > m + tol {
            Some(TripleChoice::Complement)
        } else if m > e + tol && m > c + tol {
            Some(TripleChoice::Mix)
        } else {
            None
        }
    }

    /// Every act within `tol` of the best value.
    pub fn maximizers(&self, tol: f64) -> Vec<TripleChoice> {
        let best = self.event.max(self.complement).max(self.mix);
        let mut out = Vec::with_capacity(3);
        if self.event >= best - tol {
            out.push(TripleChoice::Event);
        }
        if self.complement >= best - tol {
            out.push(TripleChoice::Complement);
        }
        if self.mix >= best - tol {
            out.push(TripleChoice::Mix);
        }
        out
    }
}

impl PreferenceModel {
    pub fn seu(p: f64) -> Result<Self> {
        Ok(PreferenceModel::Seu { p: Probability::new(p)? })
    }

    pub fn maxmin(a: f64, b: f64) -> Result<Self> {
        Ok(PreferenceModel::Maxmin { beliefs: BeliefInterval::new(a, b)? })
    }

    pub fn variational(cost: CostFunction) -> Self {
        PreferenceModel::Variational { cost }
    }

    pub fn second_order(distribution: SecondOrderDistribution, phi: SecondOrderUtility) -> Self {
        PreferenceModel::SecondOrder { distribution, phi }
    }

    pub fn prob_soph(p: f64, weighting: ProbWeighting) -> Result<Self> {
        weighting.validate()?;
        Ok(PreferenceModel::ProbSoph { p: Probability::new(p)?, weighting })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PreferenceModel::Seu { .. } => "seu",
            PreferenceModel::Maxmin { .. } => "maxmin",
            PreferenceModel::Variational { .. } => "variational",
            PreferenceModel::SecondOrder { .. } => "second-order",
            PreferenceModel::ProbSoph { .. } => "prob-soph",
        }
    }

    /// The smallest interval containing every probability the representation uses.
    pub fn belief_interval(&self) -> BeliefInterval {
        match self {
            PreferenceModel::Seu { p } | PreferenceModel::ProbSoph { p, .. } => BeliefInterval::point(*p),
            PreferenceModel::Maxmin { beliefs } => *beliefs,
            PreferenceModel::Variational { cost } => cost.domain(),
            PreferenceModel::SecondOrder { distribution, .. } => distribution.support(),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Seu { p } => Self::seu(*p),
            ModelSpec::Maxmin { a, b } => Self::maxmin(*a, *b),
            ModelSpec::Variational { a, b, cost } => {
                Ok(Self::variational(CostFunction::from_spec(BeliefInterval::new(*a, *b)?, cost)?))
            }
            ModelSpec::SecondOrder { distribution, phi } => Ok(Self::second_order(
                SecondOrderDistribution::from_spec(distribution)?,
                SecondOrderUtility::from_spec(phi)?,
            )),
            ModelSpec::ProbSoph { p, weighting } => Self::prob_soph(*p, *weighting),
        }
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        Ok(match self {
            PreferenceModel::Seu { p } => ModelSpec::Seu { p: p.get() },
            PreferenceModel::Maxmin { beliefs } => ModelSpec::Maxmin { a: beliefs.lower(), b: beliefs.upper() },
            PreferenceModel::Variational { cost } => {
                let d = cost.domain();
                ModelSpec::Variational { a: d.lower(), b: d.upper(), cost: cost.to_spec()? }
            }
            PreferenceModel::SecondOrder { distribution, phi } => {
                ModelSpec::SecondOrder { distribution: distribution.to_spec()?, phi: phi.to_spec()? }
            }
            PreferenceModel::ProbSoph { p, weighting } => ModelSpec::ProbSoph { p: p.get(), weighting: *weighting },
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_spec()?)?)
    }
}

impl Serialize for PreferenceModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().map_err(serde::ser::Error::custom)?.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PreferenceModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = ModelSpec::deserialize(deserializer)?;
        PreferenceModel::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

/// Utility of allocating `x` at quota `q`.
pub fn model_value(m: &PreferenceModel, x: MixingChoice, q: OddsQuota, scale: &UtilityScale) -> Result<f64> {
    let (x, q) = (x.get(), q.get());
    let u = |p: f64| scale.u0() + scale.u_delta() * expected_score_raw(x, q, p);
    match m {
        PreferenceModel::Seu { p } => Ok(u(p.get())),
        // Affine in p, so the minimum sits at an endpoint.
        PreferenceModel::Maxmin { beliefs } => Ok(u(beliefs.lower()).min(u(beliefs.upper()))),
        PreferenceModel::Variational { cost } => {
            let p = worst_case_belief(cost, x, q, scale.u_delta());
            Ok(u(p) + cost.eval(p))
        }
        PreferenceModel::SecondOrder { distribution, phi } => {
            let panels = second_order_panels(distribution, phi, scale, (x - (1.0 - q)).abs());
            distribution.expect(panels, |p| phi.eval(u(p)))
        }
        PreferenceModel::ProbSoph { .. } => Err(Error::ProbSophContinuousUnsupported),
    }
}

/// Values of the acts `[E_q]`, `[C_q]` and `[M_q]` (allocations 1, 0 and `1 - q`).
pub fn choice_triple_values(m: &PreferenceModel, q: OddsQuota, scale: &UtilityScale) -> Result<TripleValues> {
    if let PreferenceModel::ProbSoph { p, weighting } = m {
        let (p, q) = (p.get(), q.get());
        let w = |prob: f64| binarized_value(Score::saturating(weighting.apply(prob)), scale);
        return Ok(TripleValues { event: w(p * q), complement: w((1.0 - p) * (1.0 - q)), mix: w(q * (1.0 - q)) });
    }
    Ok(TripleValues {
        event: model_value(m, MixingChoice::ONE, q, scale)?,
        complement: model_value(m, MixingChoice::ZERO, q, scale)?,
        mix: model_value(m, MixingChoice::saturating(1.0 - q.get()), q, scale)?,
    })
}

/// The belief a variational agent fears most at allocation `x`:
/// `argmin_{p in B} u_delta * s(x, p) + c(p)`.
///
/// The objective is convex in `p` with derivative
/// `u_delta (x - (1 - q)) + c'(p)`, so the minimizer is an endpoint or the
/// unique root of that derivative, found by bisection to full precision.
pub(crate) fn worst_case_belief(cost: &CostFunction, x: f64, q: f64, u_delta: f64) -> f64 {
    let domain = cost.domain();
    let (mut lo, mut hi) = (domain.lower(), domain.upper());
    let slope = u_delta * (x - (1.0 - q));
    let derivative = |p: f64| slope + cost.d1(p);
    if derivative(lo) >= 0.0 {
        return lo;
    }
    if derivative(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if derivative(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Panel count for a second-order expectation whose score has slope at
/// most `slope_bound` in `p`.
pub(crate) fn second_order_panels(
    distribution: &SecondOrderDistribution,
    phi: &SecondOrderUtility,
    scale: &UtilityScale,
    slope_bound: f64,
) -> usize {
    let support = distribution.support();
    let curvature = phi.curvature_bound(scale.u0(), scale.uw());
    let spread = curvature * scale.u_delta() * slope_bound * support.width();
    if !spread.is_finite() {
        return MAX_PANELS;
    }
    ((spread / LOG_SPREAD_PER_PANEL).ceil() as usize).clamp(1, MAX_PANELS)
}
