//! Second-order utility `phi` for smooth ambiguity preferences.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-5;
const CHECK_POINTS: usize = 101;

#[derive(Clone)]
pub enum PhiKind {
    /// `phi(z) = -exp(-theta z)`: constant ambiguity aversion `theta`.
    Cara {
        theta: f64,
    },
    /// `phi(z) = z`: ambiguity neutral.
    Linear,
    Custom {
        phi: RealFn,
        d1: RealFn,
        d2: RealFn,
    },
}

impl fmt::Debug for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiKind::Cara { theta } => f.debug_struct("Cara").field("theta", theta).finish(),
            PhiKind::Linear => f.write_str("Linear"),
            PhiKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SecondOrderUtility {
    kind: PhiKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSpec {
    Cara { theta: f64 },
    Linear,
}

impl SecondOrderUtility {
    pub fn cara(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidUtility(format!("CARA coefficient must be positive, got {theta}")));
        }
        Ok(Self { kind: PhiKind::Cara { theta } })
    }

    pub fn linear() -> Self {
        Self { kind: PhiKind::Linear }
    }

    /// A user-supplied `phi` with derivatives, checked on `[check_lo, check_hi]`
    /// (the range of utilities the caller intends to evaluate): increasing,
    /// concave, and derivatives consistent with finite differences.
    pub fn custom<F, D1, D2>(phi: F, d1: D1, d2: D2, check_lo: f64, check_hi: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(check_lo < check_hi) || !check_lo.is_finite() || !check_hi.is_finite() {
            return Err(Error::InvalidUtility(format!("empty check range [{check_lo}, {check_hi}]")));
        }
        let u = Self { kind: PhiKind::Custom { phi: Arc::new(phi), d1: Arc::new(d1), d2: Arc::new(d2) } };
        for i in 0..CHECK_POINTS {
            let z = check_lo + (check_hi - check_lo) * i as f64 / (CHECK_POINTS - 1) as f64;
            let (g1, g2) = (u.d1(z), u.d2(z));
            if !(g1 > 0.0) {
                return Err(Error::InvalidUtility(format!("not strictly increasing at z = {z}: phi' = {g1}")));
            }
            if g2 > 0.0 {
                return Err(Error::InvalidUtility(format!("not concave at z = {z}: phi'' = {g2}")));
            }
            let fd1 = (u.eval(z + FD_STEP) - u.eval(z - FD_STEP)) / (2.0 * FD_STEP);
            if (fd1 - g1).abs() > FD_REL_TOL * g1.abs().max(1.0) {
                return Err(Error::InvalidUtility(format!("phi' disagrees with finite differences at z = {z}")));
            }
            let fd2 = (u.d1(z + FD_STEP) - u.d1(z - FD_STEP)) / (2.0 * FD_STEP);
            if (fd2 - g2).abs() > FD_REL_TOL * g2.abs().max(1.0) {
                return Err(Error::InvalidUtility(format!("phi'' disagrees with finite differences at z = {z}")));
            }
        }
        Ok(u)
    }

    pub fn from_spec(spec: &PhiSpec) -> Result<Self> {
        match *spec {
            PhiSpec::Cara { theta } => Self::cara(theta),
            PhiSpec::Linear => Ok(Self::linear()),
        }
    }

    pub fn to_spec(&self) -> Result<PhiSpec> {
        match self.kind {
            PhiKind::Cara { theta } => Ok(PhiSpec::Cara { theta }),
            PhiKind::Linear => Ok(PhiSpec::Linear),
            PhiKind::Custom { .. } => Err(Error::NotSerializable("custom second-order utility")),
        }
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            PhiKind::Cara { theta } => -(-theta * z).exp(),
            PhiKind::Linear => z,
            PhiKind::Custom { phi, .. } => phi(z),
        }
    }

    pub fn d1(&self, z: f64) -> f64 {
        match &self.kind {
            PhiKind::Cara { theta } => theta * (-theta * z).exp(),
            PhiKind::Linear => 1.0,
            PhiKind::Custom { d1, .. } => d1(z),
        }
    }

    pub fn d2(&self, z: f64) -> f64 {
        match &self.kind {
            PhiKind::Cara { theta } => -theta * theta * (-theta * z).exp(),
            PhiKind::Linear => 0.0,
            PhiKind::Custom { d2, .. } => d2(z),
        }
    }

    /// `ln phi'(z)`, computed without underflow for the parametric kinds.
    pub fn log_d1(&self, z: f64) -> f64 {
        match &self.kind {
            PhiKind::Cara { theta } => theta.ln() - theta * z,
            PhiKind::Linear => 0.0,
            PhiKind::Custom { d1, .. } => d1(z).ln(),
        }
    }

    /// Upper estimate of `-phi''/phi'` over `[lo, hi]`; sizes quadrature panels.
    pub(crate) fn curvature_bound(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            PhiKind::Cara { theta } => *theta,
            PhiKind::Linear => 0.0,
            PhiKind::Custom { .. } => {
                let mut worst: f64 = 0.0;
                for i in 0..=8 {
                    let z = lo + (hi - lo) * i as f64 / 8.0;
                    let a = -self.d2(z) / self.d1(z);
                    if a.is_finite() {
                        worst = worst.max(a);
                    }
                }
                worst
            }
        }
    }
}

/// Coefficient of ambiguity aversion `-phi''(z) / phi'(z)`.
pub fn ambiguity_coefficient(phi: &SecondOrderUtility, z: f64) -> Result<f64> {
    if let PhiKind::Cara { theta } = phi.kind() {
        return Ok(*theta);
    }
    let d1 = phi.d1(z);
    if !(d1 > 0.0) {
        return Err(Error::NonpositiveDerivative { z, derivative: d1 });
    }
    Ok(-phi.d2(z) / d1)
}
