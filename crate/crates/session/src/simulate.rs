//! Simulated subjects: a preference model answering a session's trials.

use std::collections::BTreeMap;

use mixbet_core::{
    best_response, choice_triple_values, ChoiceMode, MixingChoice, ObservationSet, OddsQuota, PreferenceModel,
    TripleChoice, UtilityScale,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::session::{NextTrial, Session};

/// Ties between triple options closer than this are broken by preference order.
pub const TRIPLE_TIE_TOL: f64 = 1e-12;

/// Logistic perturbation of the canonical allocation, off unless requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseNoise {
    /// Scale of the logistic shock added to `x`.
    pub scale: f64,
    pub seed: u64,
}

/// The model's answer at odds `q`: the canonical best response in continuous
/// mode; in triple mode the best of `{1, 1 - q, 0}`, preferring the hedge,
/// then the event bet, on ties.
pub fn respond(model: &PreferenceModel, mode: ChoiceMode, q: OddsQuota, scale: &UtilityScale) -> Result<MixingChoice> {
    let unsupported = |e: mixbet_core::Error| match e {
        mixbet_core::Error::UnsupportedModel(_) | mixbet_core::Error::ProbSophContinuousUnsupported => {
            Error::UnsupportedModel(e.to_string())
        }
        other => Error::Core(other),
    };
    match mode {
        ChoiceMode::Continuous => Ok(best_response(model, q, scale).map_err(unsupported)?.canonical(q)),
        ChoiceMode::Triple => {
            let best = choice_triple_values(model, q, scale).map_err(unsupported)?.maximizers(TRIPLE_TIE_TOL);
            let pick = [TripleChoice::Mix, TripleChoice::Event, TripleChoice::Complement]
                .into_iter()
                .find(|c| best.contains(c))
                .expect("some option is maximal");
            Ok(pick.allocation(q))
        }
    }
}

fn perturb(x: MixingChoice, q: OddsQuota, mode: ChoiceMode, noise: &ResponseNoise, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let shocked = (x.get() + noise.scale * (u / (1.0 - u)).ln()).clamp(0.0, 1.0);
    match mode {
        ChoiceMode::Continuous => shocked,
        ChoiceMode::Triple => {
            let options = [0.0, 1.0 - q.get(), 1.0];
            options.into_iter().min_by(|a, b| (a - shocked).abs().total_cmp(&(b - shocked).abs())).expect("three")
        }
    }
}

/// Runs a full session with `model` answering every trial.
pub fn play_session(
    model: &PreferenceModel,
    cfg: &SessionConfig,
    scale: &UtilityScale,
    noise: Option<&ResponseNoise>,
) -> Result<Session> {
    play_session_as("simulated", model, cfg, scale, noise)
}

/// [`play_session`] under a chosen session id.
pub fn play_session_as(
    id: &str,
    model: &PreferenceModel,
    cfg: &SessionConfig,
    scale: &UtilityScale,
    noise: Option<&ResponseNoise>,
) -> Result<Session> {
    let mut session = Session::create(id, cfg.clone(), 0)?;
    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    while let NextTrial::Trial { trial } = session.next_trial(0)? {
        let x = respond(model, cfg.choice_mode, trial.q, scale)?;
        let x = match (noise, rng.as_mut()) {
            (Some(n), Some(rng)) => perturb(x, trial.q, cfg.choice_mode, n, rng),
            _ => x.get(),
        };
        session.record_choice(trial.trial_id, x, 0)?;
    }
    Ok(session)
}

/// Noiseless observations per topic, ready for identification.
pub fn simulate_subject(
    model: &PreferenceModel,
    cfg: &SessionConfig,
    scale: &UtilityScale,
) -> Result<BTreeMap<String, ObservationSet>> {
    play_session(model, cfg, scale, None)?.all_observations()
}
