//! Session configuration as submitted by the experimenter.

use std::collections::BTreeSet;

use mixbet_core::identify::{DEFAULT_MIN_GAP, DEFAULT_MIXING_EPS};
use mixbet_core::{ChoiceMode, OddsQuota, RefineOptions};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topic {
    /// Short identifier, unique within a session.
    pub tag: String,
    /// The event as shown to the subject.
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    /// The same odds quotas for every topic, in the given order.
    Fixed { quotas: Vec<OddsQuota> },
    /// Up to `budget` trials per topic, each placed by endpoint refinement
    /// of the choices recorded so far.
    Adaptive {
        budget: usize,
        #[serde(default = "default_min_gap")]
        min_gap: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_min_gap() -> f64 {
    DEFAULT_MIN_GAP
}

fn default_eps() -> f64 {
    DEFAULT_MIXING_EPS
}

impl Schedule {
    pub fn adaptive(budget: usize) -> Self {
        Schedule::Adaptive { budget, min_gap: DEFAULT_MIN_GAP, eps: DEFAULT_MIXING_EPS }
    }

    /// Fixed grid `q = 1/n, ..., (n-1)/n`.
    pub fn interior_grid(n: usize) -> Self {
        Schedule::Fixed { quotas: (1..n).map(|i| OddsQuota::saturating(i as f64 / n as f64)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prize {
    pub amount: f64,
    pub currency: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub subject_id: String,
    pub topics: Vec<Topic>,
    pub schedule: Schedule,
    #[serde(default)]
    pub choice_mode: ChoiceMode,
    pub prize: Prize,
    /// Seed for trial order and resolution draws; drawn from the OS when absent.
    #[serde(default)]
    pub rng_seed: Option<u64>,
    /// Shuffle the fixed schedule across topics and quotas.
    #[serde(default)]
    pub shuffle_trials: bool,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.topics.is_empty() {
            return bad("at least one topic is required".into());
        }
        let mut tags = BTreeSet::new();
        for t in &self.topics {
            if t.tag.is_empty() {
                return bad("topic tags must be nonempty".into());
            }
            if !tags.insert(t.tag.as_str()) {
                return bad(format!("duplicate topic tag `{}`", t.tag));
            }
        }
        if !(self.prize.amount > 0.0 && self.prize.amount.is_finite()) {
            return bad(format!("prize must be positive, got {}", self.prize.amount));
        }
        match &self.schedule {
            Schedule::Fixed { quotas } => {
                if quotas.is_empty() {
                    return bad("fixed schedule is empty".into());
                }
                let mut seen = BTreeSet::new();
                if let Some(q) = quotas.iter().find(|q| !seen.insert(q.get().to_bits())) {
                    return bad(format!("quota {q} appears twice in the schedule"));
                }
            }
            Schedule::Adaptive { budget, min_gap, eps } => {
                if *budget == 0 {
                    return bad("adaptive budget must be at least 1".into());
                }
                if !(*min_gap > 0.0 && *min_gap < 1.0) {
                    return bad(format!("min_gap must lie in (0, 1), got {min_gap}"));
                }
                if !(0.0..0.5).contains(eps) {
                    return bad(format!("eps must lie in [0, 0.5), got {eps}"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Options for adaptive refinement; defaults for fixed schedules.
    pub fn refine_options(&self) -> RefineOptions {
        match self.schedule {
            Schedule::Adaptive { min_gap, eps, .. } => RefineOptions { min_gap, eps },
            Schedule::Fixed { .. } => RefineOptions::default(),
        }
    }

    pub fn topic_tags(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|t| t.tag.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SessionConfig {
        SessionConfig {
            subject_id: "s1".into(),
            topics: vec![Topic { tag: "urn".into(), description: "A red ball is drawn".into() }],
            schedule: Schedule::interior_grid(10),
            choice_mode: ChoiceMode::Triple,
            prize: Prize { amount: 10.0, currency: "EUR".into() },
            rng_seed: Some(7),
            shuffle_trials: false,
        }
    }

    #[test]
    fn valid_config_round_trips() {
        let cfg = base();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SessionConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn zero_prize_is_rejected() {
        let mut cfg = base();
        cfg.prize.amount = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn structural_errors() {
        let mut cfg = base();
        cfg.topics.push(cfg.topics[0].clone());
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.schedule = Schedule::adaptive(0);
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.schedule = Schedule::Fixed { quotas: vec![OddsQuota::saturating(0.5); 2] };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn adaptive_defaults_fill_in() {
        let text = r#"{"subject_id":"a","topics":[{"tag":"t","description":"d"}],
            "schedule":{"kind":"adaptive","budget":7},"prize":{"amount":5,"currency":"USD"}}"#;
        let cfg = SessionConfig::from_json(text).unwrap();
        assert_eq!(cfg.schedule, Schedule::adaptive(7));
        assert_eq!(cfg.choice_mode, ChoiceMode::Continuous);
        assert!(SessionConfig::from_json(&text.replace("\"budget\"", "\"budgett\"")).is_err());
    }
}
