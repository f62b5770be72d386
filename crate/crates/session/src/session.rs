//! The mixing-bet protocol as a replayable state machine.
//!
//! Every mutation appends one [`SessionEvent`], and the ndjson rendering of
//! the event list is the canonical serialization of a session. Loading
//! replays the events through the same transitions, so a log the engine
//! could not have produced (trials out of schedule, unsnapped triple
//! choices, a forged resolution) is rejected.

use std::collections::BTreeMap;

use mixbet_core::identify::snap_triple;
use mixbet_core::{
    mixing_interval, refine_schedule_with, score, ChoiceMode, MixingChoice, MixingIntervalResult, Observation,
    ObservationSet, OddsQuota, Score,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Prize, Schedule, SessionConfig};
use crate::error::{Error, Result};

/// ChaCha stream used to shuffle the fixed schedule.
pub const ORDER_STREAM: u64 = 0;
/// ChaCha stream used to pick the paid trial.
pub const SELECTION_STREAM: u64 = 1;
/// ChaCha stream used for the lottery draw `r`.
pub const LOTTERY_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AllowedChoices {
    /// Any allocation in `[0, 1]`.
    Continuous,
    /// Event bet, hedge, complement bet: `[0, 1 - q, 1]`.
    Triple { options: [MixingChoice; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Pending,
    Answered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: u32,
    pub topic: String,
    pub q: OddsQuota,
    pub allowed: AllowedChoices,
    pub status: TrialStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<MixingChoice>,
    pub issued_at: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answered_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum NextTrial {
    Trial { trial: Trial },
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceAck {
    pub trial_id: u32,
    /// The value as stored, after snapping in triple mode.
    pub x: MixingChoice,
    /// An identical resubmission of an earlier answer.
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionAudit {
    pub seed: u64,
    pub selection_stream: u64,
    pub lottery_stream: u64,
    /// Answered trial ids in the order the selection index refers to.
    pub candidates: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRecord {
    pub selected_trial_id: u32,
    pub topic: String,
    pub q: OddsQuota,
    pub x: MixingChoice,
    pub event_realized: bool,
    /// Uniform draw on `[0, 1)`.
    pub r: f64,
    pub score: Score,
    pub payout: bool,
    pub prize: Prize,
    pub audit: ResolutionAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SessionEvent {
    Created { session_id: String, config: SessionConfig, seed: u64, at: u64 },
    TrialIssued { trial_id: u32, topic: String, q: OddsQuota, at: u64 },
    Choice { trial_id: u32, x: MixingChoice, at: u64 },
    Resolution { realizations: BTreeMap<String, bool>, record: ResolutionRecord, at: u64 },
}

/// Session ids double as file names: 1 to 64 ASCII letters, digits, `-` or `_`.
pub fn is_valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

/// Index of the paid trial among `candidates` answered trials, and the lottery draw.
pub fn draw_resolution(seed: u64, candidates: usize) -> (usize, f64) {
    let mut selection = ChaCha8Rng::seed_from_u64(seed);
    selection.set_stream(SELECTION_STREAM);
    let mut lottery = ChaCha8Rng::seed_from_u64(seed);
    lottery.set_stream(LOTTERY_STREAM);
    (selection.random_range(0..candidates), lottery.random::<f64>())
}

/// The prize is paid when the draw does not exceed the realized score.
pub fn lottery_payout(x: MixingChoice, q: OddsQuota, event_realized: bool, r: f64) -> bool {
    r <= score(x, q, event_realized).get()
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    config: SessionConfig,
    seed: u64,
    /// Fixed schedules only: `(topic index, quota)` in issue order.
    plan: Vec<(usize, OddsQuota)>,
    trials: Vec<Trial>,
    resolution: Option<ResolutionRecord>,
    events: Vec<SessionEvent>,
}

impl Session {
    pub fn create(id: impl Into<String>, config: SessionConfig, at: u64) -> Result<Self> {
        let seed = config.rng_seed.unwrap_or_else(rand::random);
        Self::start(id.into(), config, seed, at)
    }

    fn start(id: String, config: SessionConfig, seed: u64, at: u64) -> Result<Self> {
        if !is_valid_session_id(&id) {
            return Err(Error::InvalidConfig(format!("`{id}` is not a valid session id")));
        }
        config.validate()?;
        let mut plan = Vec::new();
        if let Schedule::Fixed { quotas } = &config.schedule {
            for t in 0..config.topics.len() {
                plan.extend(quotas.iter().map(|q| (t, *q)));
            }
            if config.shuffle_trials {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(ORDER_STREAM);
                plan.shuffle(&mut rng);
            }
        }
        let created = SessionEvent::Created { session_id: id.clone(), config: config.clone(), seed, at };
        Ok(Self { id, config, seed, plan, trials: Vec::new(), resolution: None, events: vec![created] })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn resolution(&self) -> Option<&ResolutionRecord> {
        self.resolution.as_ref()
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    fn pending(&self) -> Option<&Trial> {
        self.trials.iter().find(|t| t.status == TrialStatus::Pending)
    }

    /// The next trial to issue once nothing is pending.
    fn upcoming(&self) -> Result<Option<(String, OddsQuota)>> {
        match &self.config.schedule {
            Schedule::Fixed { .. } => {
                Ok(self.plan.get(self.trials.len()).map(|&(t, q)| (self.config.topics[t].tag.clone(), q)))
            }
            Schedule::Adaptive { budget, .. } => {
                let opts = self.config.refine_options();
                for tag in self.config.topic_tags() {
                    if self.trials.iter().filter(|t| t.topic == tag).count() >= *budget {
                        continue;
                    }
                    if let Some(q) = refine_schedule_with(&self.observations(tag)?, 1, &opts).first() {
                        return Ok(Some((tag.to_string(), *q)));
                    }
                }
                Ok(None)
            }
        }
    }

    /// The pending trial, issuing the next scheduled one if none is pending.
    pub fn next_trial(&mut self, at: u64) -> Result<NextTrial> {
        if self.resolution.is_some() {
            return Ok(NextTrial::Done);
        }
        if let Some(t) = self.pending() {
            return Ok(NextTrial::Trial { trial: t.clone() });
        }
        match self.upcoming()? {
            Some((topic, q)) => Ok(NextTrial::Trial { trial: self.issue(topic, q, at).clone() }),
            None => Ok(NextTrial::Done),
        }
    }

    fn issue(&mut self, topic: String, q: OddsQuota, at: u64) -> &Trial {
        let trial_id = self.trials.len() as u32 + 1;
        let allowed = match self.config.choice_mode {
            ChoiceMode::Continuous => AllowedChoices::Continuous,
            ChoiceMode::Triple => AllowedChoices::Triple {
                options: [MixingChoice::ZERO, MixingChoice::saturating(1.0 - q.get()), MixingChoice::ONE],
            },
        };
        self.events.push(SessionEvent::TrialIssued { trial_id, topic: topic.clone(), q, at });
        self.trials.push(Trial {
            trial_id,
            topic,
            q,
            allowed,
            status: TrialStatus::Pending,
            x: None,
            issued_at: at,
            answered_at: None,
        });
        self.trials.last().expect("just pushed")
    }

    pub fn record_choice(&mut self, trial_id: u32, x: f64, at: u64) -> Result<ChoiceAck> {
        if self.resolution.is_some() {
            return Err(Error::SessionClosed);
        }
        let mode = self.config.choice_mode;
        let trial = self.trials.iter_mut().find(|t| t.trial_id == trial_id).ok_or(Error::UnknownTrial(trial_id))?;
        if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
            return Err(Error::OutOfRange(format!("x = {x} is not in [0, 1]")));
        }
        let stored = match mode {
            ChoiceMode::Continuous => MixingChoice::saturating(x),
            ChoiceMode::Triple => snap_triple(trial.q, x)
                .ok_or_else(|| Error::OutOfRange(format!("x = {x} is not one of 0, {}, 1", 1.0 - trial.q.get())))?,
        };
        if let Some(prev) = trial.x {
            if prev == stored {
                return Ok(ChoiceAck { trial_id, x: stored, duplicate: true });
            }
            return Err(Error::DuplicateConflicting { trial_id, recorded: prev.get(), submitted: x });
        }
        trial.x = Some(stored);
        trial.status = TrialStatus::Answered;
        trial.answered_at = Some(at);
        self.events.push(SessionEvent::Choice { trial_id, x: stored, at });
        Ok(ChoiceAck { trial_id, x: stored, duplicate: false })
    }

    /// Nothing pending and nothing left to schedule.
    pub fn is_complete(&self) -> Result<bool> {
        Ok(self.pending().is_none() && self.upcoming()?.is_none())
    }

    fn unanswered(&self) -> Result<usize> {
        let pending = self.trials.iter().filter(|t| t.status == TrialStatus::Pending).count();
        let planned = match self.config.schedule {
            Schedule::Fixed { .. } => self.plan.len() - self.trials.len(),
            Schedule::Adaptive { .. } => usize::from(pending == 0 && self.upcoming()?.is_some()),
        };
        Ok(pending + planned)
    }

    /// Pays one uniformly selected answered trial, once every trial is answered.
    pub fn resolve(&mut self, realizations: &BTreeMap<String, bool>, at: u64) -> Result<ResolutionRecord> {
        if self.resolution.is_some() {
            return Err(Error::SessionClosed);
        }
        let pending = self.unanswered()?;
        if pending > 0 {
            return Err(Error::UnresolvedTrials { pending });
        }
        let candidates: Vec<&Trial> = self.trials.iter().collect();
        if candidates.is_empty() {
            return Err(Error::UnresolvedTrials { pending: 0 });
        }
        let (index, r) = draw_resolution(self.seed, candidates.len());
        let trial = candidates[index];
        let event_realized =
            *realizations.get(&trial.topic).ok_or_else(|| Error::MissingRealization(trial.topic.clone()))?;
        let x = trial.x.expect("answered");
        let record = ResolutionRecord {
            selected_trial_id: trial.trial_id,
            topic: trial.topic.clone(),
            q: trial.q,
            x,
            event_realized,
            r,
            score: score(x, trial.q, event_realized),
            payout: lottery_payout(x, trial.q, event_realized, r),
            prize: self.config.prize.clone(),
            audit: ResolutionAudit {
                seed: self.seed,
                selection_stream: SELECTION_STREAM,
                lottery_stream: LOTTERY_STREAM,
                candidates: candidates.iter().map(|t| t.trial_id).collect(),
            },
        };
        self.events.push(SessionEvent::Resolution { realizations: realizations.clone(), record: record.clone(), at });
        self.resolution = Some(record.clone());
        Ok(record)
    }

    /// Answered trials for one topic, in answer order.
    pub fn observations(&self, topic: &str) -> Result<ObservationSet> {
        let mode = self.config.choice_mode;
        let records = self
            .trials
            .iter()
            .filter(|t| t.topic == topic)
            .filter_map(|t| t.x.map(|x| Observation { q: t.q, x, mode }))
            .collect();
        Ok(ObservationSet::new(records)?)
    }

    pub fn all_observations(&self) -> Result<BTreeMap<String, ObservationSet>> {
        self.config.topic_tags().map(|t| Ok((t.to_string(), self.observations(t)?))).collect()
    }

    /// Live mixing interval per topic.
    pub fn bounds(&self) -> Result<BTreeMap<String, MixingIntervalResult>> {
        let eps = self.config.refine_options().eps;
        self.all_observations()?.into_iter().map(|(t, obs)| Ok((t, mixing_interval(&obs, eps)?))).collect()
    }

    pub fn has_topic(&self, topic: &str) -> bool {
        self.config.topic_tags().any(|t| t == topic)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    /// Rebuilds a session by replaying its log.
    pub fn from_ndjson(text: &str) -> Result<Self> {
        let corrupt = |line: usize, msg: String| Error::CorruptLog(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::CorruptLog("empty log".into()))?;
        let mut session = match serde_json::from_str(first) {
            Ok(SessionEvent::Created { session_id, config, seed, at }) => {
                Self::start(session_id, config, seed, at).map_err(|e| corrupt(1, e.to_string()))?
            }
            Ok(_) => return Err(corrupt(1, "log must start with a `created` event".into())),
            Err(e) => return Err(corrupt(1, e.to_string())),
        };
        for (i, line) in lines {
            let event: SessionEvent = serde_json::from_str(line).map_err(|e| corrupt(i + 1, e.to_string()))?;
            session.replay(event).map_err(|e| corrupt(i + 1, e.to_string()))?;
        }
        Ok(session)
    }

    fn replay(&mut self, event: SessionEvent) -> Result<()> {
        let mismatch = |what: &str| Err(Error::CorruptLog(format!("{what} does not match the session state")));
        match event {
            SessionEvent::Created { .. } => mismatch("second `created` event"),
            SessionEvent::TrialIssued { trial_id, topic, q, at } => {
                if self.resolution.is_some() || self.pending().is_some() {
                    return mismatch("trial issued while another is pending");
                }
                let expected = self.upcoming()?;
                if trial_id as usize != self.trials.len() + 1
                    || expected.as_ref().is_none_or(|(t, eq)| *t != topic || eq.get().to_bits() != q.get().to_bits())
                {
                    return mismatch("issued trial");
                }
                self.issue(topic, q, at);
                Ok(())
            }
            SessionEvent::Choice { trial_id, x, at } => {
                let ack = self.record_choice(trial_id, x.get(), at)?;
                if ack.duplicate || ack.x.get().to_bits() != x.get().to_bits() {
                    return mismatch("recorded choice");
                }
                Ok(())
            }
            SessionEvent::Resolution { realizations, record, at } => {
                if self.resolve(&realizations, at)? != record {
                    return mismatch("resolution record");
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Prize, Topic};

    fn config(schedule: Schedule, mode: ChoiceMode) -> SessionConfig {
        SessionConfig {
            subject_id: "subject-1".into(),
            topics: vec![Topic { tag: "urn".into(), description: "Red ball".into() }],
            schedule,
            choice_mode: mode,
            prize: Prize { amount: 10.0, currency: "EUR".into() },
            rng_seed: Some(42),
            shuffle_trials: false,
        }
    }

    fn answer_all(s: &mut Session, x: impl Fn(OddsQuota) -> f64) {
        while let NextTrial::Trial { trial } = s.next_trial(0).unwrap() {
            s.record_choice(trial.trial_id, x(trial.q), 0).unwrap();
        }
    }

    #[test]
    fn fixed_grid_issues_nine_trials_per_topic() {
        let mut cfg = config(Schedule::interior_grid(10), ChoiceMode::Triple);
        cfg.topics.push(Topic { tag: "stocks".into(), description: "DAX closes up".into() });
        let mut s = Session::create("a", cfg, 0).unwrap();
        let NextTrial::Trial { trial } = s.next_trial(0).unwrap() else { panic!() };
        assert_eq!((trial.trial_id, trial.q.get()), (1, 0.1));
        // Asking again returns the same pending trial.
        assert_eq!(s.next_trial(5).unwrap(), NextTrial::Trial { trial });
        answer_all(&mut s, |q| 1.0 - q.get());
        assert_eq!(s.trials().len(), 18);
        for tag in ["urn", "stocks"] {
            assert_eq!(s.trials().iter().filter(|t| t.topic == tag).count(), 9);
        }
        assert_eq!(s.next_trial(0).unwrap(), NextTrial::Done);
    }

    #[test]
    fn adaptive_session_starts_at_uniform_fill_and_bisects() {
        let mut s = Session::create("b", config(Schedule::adaptive(7), ChoiceMode::Continuous), 0).unwrap();
        let NextTrial::Trial { trial } = s.next_trial(0).unwrap() else { panic!() };
        assert_eq!(trial.q.get(), 0.5);

        // Mixing at 0.3 with corner choices at 0.1 and 0.5.
        let mut s = Session::create("c", config(Schedule::adaptive(7), ChoiceMode::Continuous), 0).unwrap();
        s.issue("urn".into(), OddsQuota::saturating(0.9), 0);
        s.record_choice(1, 1.0, 0).unwrap();
        s.issue("urn".into(), OddsQuota::saturating(0.7), 0);
        s.record_choice(2, 0.3, 0).unwrap();
        s.issue("urn".into(), OddsQuota::saturating(0.5), 0);
        s.record_choice(3, 0.0, 0).unwrap();
        let NextTrial::Trial { trial } = s.next_trial(0).unwrap() else { panic!() };
        let v = 1.0 - trial.q.get();
        assert!((v - 0.2).abs() < 1e-12 || (v - 0.4).abs() < 1e-12, "{v}");
    }

    #[test]
    fn adaptive_budget_is_respected() {
        let mut s = Session::create("d", config(Schedule::adaptive(7), ChoiceMode::Continuous), 0).unwrap();
        answer_all(&mut s, |q| if 1.0 - q.get() < 0.3 { 1.0 } else { 0.0 });
        assert_eq!(s.trials().len(), 7);
        assert!(s.is_complete().unwrap());
    }

    #[test]
    fn triple_choices_are_validated_and_snapped() {
        let mut s = Session::create(
            "e",
            config(Schedule::Fixed { quotas: vec![OddsQuota::saturating(0.6)] }, ChoiceMode::Triple),
            0,
        )
        .unwrap();
        s.next_trial(0).unwrap();
        assert!(matches!(s.record_choice(1, 0.5, 0), Err(Error::OutOfRange(_))));
        let ack = s.record_choice(1, 0.4, 0).unwrap();
        assert_eq!(ack.x.get(), 1.0 - 0.6);
        assert!(s.record_choice(1, 0.4, 0).unwrap().duplicate);
        assert!(matches!(s.record_choice(1, 1.0, 0), Err(Error::DuplicateConflicting { .. })));
        assert!(matches!(s.record_choice(9, 1.0, 0), Err(Error::UnknownTrial(9))));
    }

    #[test]
    fn continuous_choices_accept_any_allocation() {
        let mut s = Session::create("f", config(Schedule::interior_grid(4), ChoiceMode::Continuous), 0).unwrap();
        s.next_trial(0).unwrap();
        assert_eq!(s.record_choice(1, 0.73, 0).unwrap().x.get(), 0.73);
        s.next_trial(0).unwrap();
        assert!(matches!(s.record_choice(2, 1.2, 0), Err(Error::OutOfRange(_))));
        assert!(matches!(s.record_choice(2, f64::NAN, 0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn resolution_requires_all_answers_and_the_topic() {
        let mut s = Session::create("g", config(Schedule::interior_grid(10), ChoiceMode::Triple), 0).unwrap();
        let realized = BTreeMap::from([("urn".to_string(), true)]);
        assert!(matches!(s.resolve(&realized, 0), Err(Error::UnresolvedTrials { pending: 9 })));
        answer_all(&mut s, |_| 1.0);
        assert!(matches!(s.resolve(&BTreeMap::new(), 0), Err(Error::MissingRealization(_))));
        let rec = s.resolve(&realized, 0).unwrap();
        assert_eq!(rec.payout, rec.r <= rec.q.get());
        assert_eq!(rec.audit.candidates.len(), 9);
        assert!(matches!(s.resolve(&realized, 0), Err(Error::SessionClosed)));
        assert!(matches!(s.record_choice(1, 1.0, 0), Err(Error::SessionClosed)));
        assert_eq!(s.next_trial(0).unwrap(), NextTrial::Done);
    }

    #[test]
    fn payout_rule() {
        let q = OddsQuota::saturating(0.6);
        assert!(lottery_payout(MixingChoice::ONE, q, true, 0.55));
        assert!(!lottery_payout(MixingChoice::ONE, q, true, 0.65));
        assert!(!lottery_payout(MixingChoice::ONE, q, false, 0.0001));
        // The hedge wins with probability q(1 - q) whatever happens.
        let hedge = MixingChoice::saturating(0.4);
        for realized in [true, false] {
            assert!(lottery_payout(hedge, q, realized, 0.24 - 1e-12));
            assert!(!lottery_payout(hedge, q, realized, 0.24 + 1e-12));
        }
    }

    #[test]
    fn log_replays_and_rejects_tampering() {
        let mut s = Session::create("h", config(Schedule::interior_grid(10), ChoiceMode::Triple), 3).unwrap();
        answer_all(&mut s, |q| if q.get() < 0.5 { 0.0 } else { 1.0 - q.get() });
        s.resolve(&BTreeMap::from([("urn".to_string(), false)]), 9).unwrap();
        let log = s.to_ndjson();
        let back = Session::from_ndjson(&log).unwrap();
        assert_eq!(back.to_ndjson(), log);
        assert_eq!(back.resolution(), s.resolution());

        let forged = if log.contains("\"payout\":false") {
            log.replace("\"payout\":false", "\"payout\":true")
        } else {
            log.replace("\"payout\":true", "\"payout\":false")
        };
        assert!(matches!(Session::from_ndjson(&forged), Err(Error::CorruptLog(_))));
        let reordered = log.replacen("\"q\":0.1", "\"q\":0.2", 1);
        assert!(matches!(Session::from_ndjson(&reordered), Err(Error::CorruptLog(_))));
        assert!(Session::from_ndjson("").is_err());
        assert!(Session::from_ndjson(&log.lines().skip(1).collect::<Vec<_>>().join("\n")).is_err());
    }

    #[test]
    fn shuffled_order_depends_only_on_seed() {
        let mut cfg = config(Schedule::interior_grid(10), ChoiceMode::Triple);
        cfg.shuffle_trials = true;
        let order = |seed| {
            let mut cfg = cfg.clone();
            cfg.rng_seed = Some(seed);
            let mut s = Session::create("i", cfg, 0).unwrap();
            answer_all(&mut s, |_| 0.0);
            s.trials().iter().map(|t| t.q.get()).collect::<Vec<_>>()
        };
        assert_eq!(order(1), order(1));
        assert_ne!(order(1), order(2));
    }
}
