//! Second-order distributions over the event probability.
//!
//! Expectations are taken with composite Gauss–Legendre rules (64 nodes per
//! panel) for the continuous kinds and exactly for the discrete kind. The
//! caller picks the panel count from how sharply the integrand varies, so
//! that steep exponential integrands at large utility spreads stay accurate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::units::BeliefInterval;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const MASS_REL_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 4096;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DistributionKind {
    Uniform,
    Discrete {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    /// Density on the support, normalized at construction.
    Density {
        density: RealFn,
        panels: usize,
        mass: f64,
    },
}

impl fmt::Debug for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionKind::Uniform => f.write_str("Uniform"),
            DistributionKind::Discrete { points, weights } => {
                f.debug_struct("Discrete").field("points", points).field("weights", weights).finish()
            }
            DistributionKind::Density { panels, mass, .. } => {
                f.debug_struct("Density").field("panels", panels).field("mass", mass).finish()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SecondOrderDistribution {
    support: BeliefInterval,
    kind: DistributionKind,
    mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform { a: f64, b: f64 },
    Discrete { points: Vec<f64>, weights: Vec<f64> },
}

impl SecondOrderDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let support = BeliefInterval::new(a, b).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Self { support, kind: DistributionKind::Uniform, mean: support.midpoint() })
    }

    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "need matching nonempty points and weights, got {} and {}",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidDistribution(format!("support point {p} outside [0, 1]")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidDistribution(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        // The support is the hull of the points that actually carry mass.
        let charged = points.iter().zip(&weights).filter(|(_, w)| **w > 0.0).map(|(p, _)| *p);
        let (lo, hi) = charged.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
        let support = BeliefInterval::new(lo, hi).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let mean = points.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / total;
        Ok(Self { support, kind: DistributionKind::Discrete { points, weights }, mean })
    }

    /// Distribution with density proportional to `density` on `[a, b]`.
    ///
    /// The normalizing mass is integrated with `panels` 64-node panels and
    /// cross-checked against twice as many; disagreement is reported as a
    /// quadrature failure.
    pub fn density<F>(a: f64, b: f64, density: F, panels: usize) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let support = BeliefInterval::new(a, b).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        if !support.is_ambiguous() {
            return Err(Error::InvalidDistribution("density needs a nondegenerate support".into()));
        }
        let panels = panels.clamp(1, MAX_PANELS);
        let rule = GaussLegendre::standard();
        let integrate = |n: usize, g: &dyn Fn(f64) -> f64| -> Result<f64> {
            let mut total = 0.0;
            for (p, w) in rule.composite(a, b, n) {
                let d = density(p);
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::InvalidDistribution(format!("density is {d} at p = {p}")));
                }
                total += w * d * g(p);
            }
            Ok(total)
        };
        let mass = integrate(panels, &|_| 1.0)?;
        let check = integrate(2 * panels, &|_| 1.0)?;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::QuadratureFailure(format!("density integrates to {mass}")));
        }
        if ((mass - check) / mass).abs() > MASS_REL_TOL {
            return Err(Error::QuadratureFailure(format!(
                "normalizing mass not converged: {mass} with {panels} panels vs {check} with {}",
                2 * panels
            )));
        }
        let mean = integrate(panels, &|p| p)? / mass;
        Ok(Self { support, kind: DistributionKind::Density { density: Arc::new(density), panels, mass }, mean })
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Uniform { a, b } => Self::uniform(*a, *b),
            DistributionSpec::Discrete { points, weights } => Self::discrete(points.clone(), weights.clone()),
        }
    }

    pub fn to_spec(&self) -> Result<DistributionSpec> {
        match &self.kind {
            DistributionKind::Uniform => {
                Ok(DistributionSpec::Uniform { a: self.support.lower(), b: self.support.upper() })
            }
            DistributionKind::Discrete { points, weights } => {
                Ok(DistributionSpec::Discrete { points: points.clone(), weights: weights.clone() })
            }
            DistributionKind::Density { .. } => Err(Error::NotSerializable("density second-order distribution")),
        }
    }

    pub fn support(&self) -> BeliefInterval {
        self.support
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    /// Quadrature points and probability weights (summing to one).
    ///
    /// `min_panels` lets the caller refine continuous kinds for sharply
    /// varying integrands; discrete kinds ignore it.
    pub fn nodes(&self, min_panels: usize) -> Vec<(f64, f64)> {
        let (a, b) = (self.support.lower(), self.support.upper());
        match &self.kind {
            DistributionKind::Discrete { points, weights } => {
                points.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(p, w)| (*p, *w)).collect()
            }
            _ if a == b => vec![(a, 1.0)],
            DistributionKind::Uniform => {
                let width = b - a;
                GaussLegendre::standard()
                    .composite(a, b, min_panels.clamp(1, MAX_PANELS))
                    .into_iter()
                    .map(|(p, w)| (p, w / width))
                    .collect()
            }
            DistributionKind::Density { density, panels, mass } => {
                let n = min_panels.max(*panels).clamp(1, MAX_PANELS);
                GaussLegendre::standard()
                    .composite(a, b, n)
                    .into_iter()
                    .map(|(p, w)| (p, w * density(p) / mass))
                    .collect()
            }
        }
    }

    /// `E[f(p)]` using [`Self::nodes`].
    pub fn expect<F: Fn(f64) -> f64>(&self, min_panels: usize, f: F) -> Result<f64> {
        let value: f64 = self.nodes(min_panels).into_iter().map(|(p, w)| w * f(p)).sum();
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::QuadratureFailure(format!("expectation evaluated to {value}")))
        }
    }
}
