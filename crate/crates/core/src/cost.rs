//! Convex cost functions over the belief interval.
//!
//! A variational agent evaluates an act by the minimum over `p` in `B` of
//! expected utility plus `c(p)`. The solver needs `c`, `c'` and `c''`, so
//! every cost is checked at construction: grounded on `B`, convex, and with
//! derivatives that agree with finite differences.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::BeliefInterval;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const CHECK_POINTS: usize = 101;
const GROUNDED_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-5;

#[derive(Clone)]
pub enum CostKind {
    /// `theta * R(p || reference)` with `R` the binary relative entropy.
    MultiplierEntropy {
        theta: f64,
        reference: f64,
    },
    /// `theta * |p - center|^exponent`.
    Power {
        theta: f64,
        center: f64,
        exponent: f64,
    },
    /// `c = 0`: the maxmin limit. Convex but not strictly so.
    Zero,
    Custom {
        eval: RealFn,
        d1: RealFn,
        d2: RealFn,
    },
}

impl fmt::Debug for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::MultiplierEntropy { theta, reference } => {
                f.debug_struct("MultiplierEntropy").field("theta", theta).field("reference", reference).finish()
            }
            CostKind::Power { theta, center, exponent } => f
                .debug_struct("Power")
                .field("theta", theta)
                .field("center", center)
                .field("exponent", exponent)
                .finish(),
            CostKind::Zero => f.write_str("Zero"),
            CostKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CostFunction {
    domain: BeliefInterval,
    kind: CostKind,
}

/// Serializable description of the parametric cost families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostSpec {
    MultiplierEntropy { theta: f64, reference: f64 },
    Power { theta: f64, center: f64, exponent: f64 },
    Zero,
}

impl CostFunction {
    pub fn multiplier_entropy(domain: BeliefInterval, theta: f64, reference: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidCost(format!("entropy weight must be positive, got {theta}")));
        }
        if !(reference > 0.0 && reference < 1.0) {
            return Err(Error::InvalidCost(format!("reference belief must lie in (0, 1), got {reference}")));
        }
        Self::checked(domain, CostKind::MultiplierEntropy { theta, reference })
    }

    pub fn power(domain: BeliefInterval, theta: f64, center: f64, exponent: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidCost(format!("power-cost weight must be positive, got {theta}")));
        }
        if !(exponent >= 2.0 && exponent.is_finite()) {
            return Err(Error::InvalidCost(format!(
                "exponent must be at least 2 for a twice differentiable cost, got {exponent}"
            )));
        }
        Self::checked(domain, CostKind::Power { theta, center, exponent })
    }

    pub fn zero(domain: BeliefInterval) -> Self {
        Self { domain, kind: CostKind::Zero }
    }

    /// A user-supplied cost with its first two derivatives.
    pub fn custom<F, D1, D2>(domain: BeliefInterval, eval: F, d1: D1, d2: D2) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::checked(domain, CostKind::Custom { eval: Arc::new(eval), d1: Arc::new(d1), d2: Arc::new(d2) })
    }

    pub fn from_spec(domain: BeliefInterval, spec: &CostSpec) -> Result<Self> {
        match *spec {
            CostSpec::MultiplierEntropy { theta, reference } => Self::multiplier_entropy(domain, theta, reference),
            CostSpec::Power { theta, center, exponent } => Self::power(domain, theta, center, exponent),
            CostSpec::Zero => Ok(Self::zero(domain)),
        }
    }

    pub fn to_spec(&self) -> Result<CostSpec> {
        match self.kind {
            CostKind::MultiplierEntropy { theta, reference } => Ok(CostSpec::MultiplierEntropy { theta, reference }),
            CostKind::Power { theta, center, exponent } => Ok(CostSpec::Power { theta, center, exponent }),
            CostKind::Zero => Ok(CostSpec::Zero),
            CostKind::Custom { .. } => Err(Error::NotSerializable("custom cost function")),
        }
    }

    pub fn domain(&self) -> BeliefInterval {
        self.domain
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    /// The same cost multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidCost(format!("scale factor must be positive, got {factor}")));
        }
        let kind = match &self.kind {
            CostKind::MultiplierEntropy { theta, reference } => {
                CostKind::MultiplierEntropy { theta: theta * factor, reference: *reference }
            }
            CostKind::Power { theta, center, exponent } => {
                CostKind::Power { theta: theta * factor, center: *center, exponent: *exponent }
            }
            CostKind::Zero => CostKind::Zero,
            CostKind::Custom { eval, d1, d2 } => {
                let (e, a, b) = (eval.clone(), d1.clone(), d2.clone());
                CostKind::Custom {
                    eval: Arc::new(move |p| factor * e(p)),
                    d1: Arc::new(move |p| factor * a(p)),
                    d2: Arc::new(move |p| factor * b(p)),
                }
            }
        };
        Ok(Self { domain: self.domain, kind })
    }

    pub fn eval(&self, p: f64) -> f64 {
        match &self.kind {
            CostKind::MultiplierEntropy { theta, reference } => theta * relative_entropy(p, *reference),
            CostKind::Power { theta, center, exponent } => theta * (p - center).abs().powf(*exponent),
            CostKind::Zero => 0.0,
            CostKind::Custom { eval, .. } => eval(p),
        }
    }

    pub fn d1(&self, p: f64) -> f64 {
        match &self.kind {
            CostKind::MultiplierEntropy { theta, reference } => {
                let r = *reference;
                theta * ((p / r).ln() - ((1.0 - p) / (1.0 - r)).ln())
            }
            CostKind::Power { theta, center, exponent } => {
                let d = p - center;
                theta * exponent * d.abs().powf(exponent - 1.0) * d.signum()
            }
            CostKind::Zero => 0.0,
            CostKind::Custom { d1, .. } => d1(p),
        }
    }

    pub fn d2(&self, p: f64) -> f64 {
        match &self.kind {
            CostKind::MultiplierEntropy { theta, .. } => theta / (p * (1.0 - p)),
            CostKind::Power { theta, center, exponent } => {
                theta * exponent * (exponent - 1.0) * (p - center).abs().powf(exponent - 2.0)
            }
            CostKind::Zero => 0.0,
            CostKind::Custom { d2, .. } => d2(p),
        }
    }

    /// Minimizer over the domain, by bisection on `c'`.
    pub fn argmin(&self) -> f64 {
        let (mut lo, mut hi) = (self.domain.lower(), self.domain.upper());
        if self.d1(lo) >= 0.0 {
            return lo;
        }
        if self.d1(hi) <= 0.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.d1(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn checked(domain: BeliefInterval, kind: CostKind) -> Result<Self> {
        let cost = Self { domain, kind };
        cost.validate()?;
        Ok(cost)
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = (self.domain.lower(), self.domain.upper());
        if a == b {
            let v = self.eval(a);
            if v.abs() > GROUNDED_TOL {
                return Err(Error::InvalidCost(format!("not grounded: c({a}) = {v}")));
            }
            return Ok(());
        }

        let grid: Vec<f64> = (0..CHECK_POINTS).map(|i| a + (b - a) * i as f64 / (CHECK_POINTS - 1) as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&p| self.eval(p)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCost(format!("non-finite value at p = {}", grid[i])));
        }
        let grid_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let min = grid_min.min(self.eval(self.argmin()));
        if min.abs() > GROUNDED_TOL {
            return Err(Error::InvalidCost(format!("not grounded on {}: minimum is {min}", self.domain)));
        }

        // Strict convexity: strict midpoint inequality between grid neighbours,
        // plus a nonnegative second derivative at every interior grid point.
        for w in grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let chord = 0.5 * (self.eval(w[0]) + self.eval(w[1]));
            if !(self.eval(mid) < chord) {
                return Err(Error::InvalidCost(format!("not strictly convex on [{}, {}]", w[0], w[1])));
            }
        }

        for &p in &grid[1..grid.len() - 1] {
            let d1 = self.d1(p);
            let d2 = self.d2(p);
            if !d1.is_finite() || !d2.is_finite() {
                return Err(Error::InvalidCost(format!("non-finite derivative at p = {p}")));
            }
            if d2 < 0.0 {
                return Err(Error::InvalidCost(format!("negative second derivative {d2} at p = {p}")));
            }
            let fd1 = (self.eval(p + FD_STEP) - self.eval(p - FD_STEP)) / (2.0 * FD_STEP);
            if (fd1 - d1).abs() > FD_REL_TOL * d1.abs().max(1.0) {
                return Err(Error::InvalidCost(format!(
                    "first derivative disagrees with finite differences at p = {p}: {d1} vs {fd1}"
                )));
            }
            let fd2 = (self.d1(p + FD_STEP) - self.d1(p - FD_STEP)) / (2.0 * FD_STEP);
            if (fd2 - d2).abs() > FD_REL_TOL * d2.abs().max(1.0) {
                return Err(Error::InvalidCost(format!(
                    "second derivative disagrees with finite differences at p = {p}: {d2} vs {fd2}"
                )));
            }
        }
        Ok(())
    }
}

/// Binary relative entropy `R(p || r)`, with `0 ln 0 = 0`.
pub fn relative_entropy(p: f64, r: f64) -> f64 {
    xlogy(p, p / r) + xlogy(1.0 - p, (1.0 - p) / (1.0 - r))
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5_interval() -> BeliefInterval {
        BeliefInterval::new(0.1, 0.8).unwrap()
    }

    #[test]
    fn figure_families_validate() {
        for theta in [0.1, 0.5, 1.5] {
            CostFunction::multiplier_entropy(fig5_interval(), theta, 0.5).unwrap();
        }
        for theta in [1.0, 10.0, 100.0] {
            CostFunction::power(fig5_interval(), theta, 0.5, 4.0).unwrap();
        }
    }

    #[test]
    fn ungrounded_cost_is_rejected() {
        // Reference outside the domain: minimum on B is positive.
        let err = CostFunction::multiplier_entropy(BeliefInterval::new(0.6, 0.9).unwrap(), 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::InvalidCost(_)));
        let err = CostFunction::custom(fig5_interval(), |p| (p - 0.5).powi(2) + 0.1, |p| 2.0 * (p - 0.5), |_| 2.0)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidCost(_)));
    }

    #[test]
    fn inconsistent_derivatives_are_rejected() {
        let err =
            CostFunction::custom(fig5_interval(), |p| (p - 0.5).powi(2), |p| 3.0 * (p - 0.5), |_| 2.0).unwrap_err();
        assert!(err.to_string().contains("first derivative"), "{err}");
        let err =
            CostFunction::custom(fig5_interval(), |p| (p - 0.5).powi(2), |p| 2.0 * (p - 0.5), |_| 5.0).unwrap_err();
        assert!(err.to_string().contains("second derivative"), "{err}");
    }

    #[test]
    fn linear_cost_is_not_strictly_convex() {
        let err = CostFunction::custom(BeliefInterval::new(0.0, 0.5).unwrap(), |p| p, |_| 1.0, |_| 0.0).unwrap_err();
        assert!(err.to_string().contains("strictly convex"), "{err}");
    }

    #[test]
    fn power_exponent_below_two_rejected() {
        assert!(CostFunction::power(fig5_interval(), 1.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn entropy_derivatives() {
        let c = CostFunction::multiplier_entropy(fig5_interval(), 0.5, 0.5).unwrap();
        assert!((c.d1(0.7) - 0.5 * (0.7f64 / 0.3).ln()).abs() < 1e-14);
        assert!((c.d2(0.7) - 0.5 / 0.21).abs() < 1e-13);
        assert_eq!(c.eval(0.5), 0.0);
    }

    #[test]
    fn scaling_multiplies_all_derivatives() {
        let c = CostFunction::power(fig5_interval(), 10.0, 0.5, 4.0).unwrap();
        let s = c.scaled(3.0).unwrap();
        for p in [0.1, 0.33, 0.5, 0.8] {
            assert!((s.eval(p) - 3.0 * c.eval(p)).abs() < 1e-14);
            assert!((s.d1(p) - 3.0 * c.d1(p)).abs() < 1e-13);
            assert!((s.d2(p) - 3.0 * c.d2(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_round_trip() {
        let c = CostFunction::power(fig5_interval(), 1.0, 0.5, 4.0).unwrap();
        let spec = c.to_spec().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"power","theta":1.0,"center":0.5,"exponent":4.0}"#);
        let back: CostSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
