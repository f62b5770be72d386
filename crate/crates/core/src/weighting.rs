//! Probability weighting for probabilistically sophisticated agents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbWeighting {
    /// `w(p) = exp(-(-ln p)^alpha)`.
    Prelec {
        alpha: f64,
    },
    Identity,
}

impl ProbWeighting {
    pub fn prelec(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidWeighting(format!("Prelec exponent must be positive, got {alpha}")));
        }
        Ok(ProbWeighting::Prelec { alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProbWeighting::Prelec { alpha } => Self::prelec(alpha).map(|_| ()),
            ProbWeighting::Identity => Ok(()),
        }
    }

    pub fn apply(&self, p: f64) -> f64 {
        match *self {
            ProbWeighting::Prelec { alpha } => {
                if p <= 0.0 {
                    0.0
                } else {
                    (-(-p.ln()).powf(alpha)).exp()
                }
            }
            ProbWeighting::Identity => p,
        }
    }
}
