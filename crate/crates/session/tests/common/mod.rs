#![allow(dead_code)]

use mixbet_core::{ChoiceMode, OddsQuota};
use mixbet_session::{NextTrial, Prize, Schedule, Session, SessionConfig, Topic};

pub fn config(topics: &[&str], schedule: Schedule, mode: ChoiceMode, seed: Option<u64>) -> SessionConfig {
    SessionConfig {
        subject_id: "subject".into(),
        topics: topics.iter().map(|t| Topic { tag: t.to_string(), description: format!("event {t}") }).collect(),
        schedule,
        choice_mode: mode,
        prize: Prize { amount: 10.0, currency: "EUR".into() },
        rng_seed: seed,
        shuffle_trials: false,
    }
}

/// The nine-point grid `q = 0.1, ..., 0.9`.
pub fn nine_point_grid() -> Schedule {
    Schedule::interior_grid(10)
}

pub fn answer_all(s: &mut Session, mut x: impl FnMut(&str, OddsQuota) -> f64) {
    while let NextTrial::Trial { trial } = s.next_trial(0).unwrap() {
        s.record_choice(trial.trial_id, x(&trial.topic, trial.q), 0).unwrap();
    }
}
