#![no_main]
use libfuzzer_sys::fuzz_target;
use mixbet_session::{NextTrial, Session, SessionConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = SessionConfig::from_json(s) {
            if let Ok(mut session) = Session::create("fuzz", cfg, 0) {
                // Answer a bounded number of trials with the hedge.
                for _ in 0..64 {
                    match session.next_trial(0).expect("open sessions issue trials") {
                        NextTrial::Trial { trial } => {
                            session.record_choice(trial.trial_id, 1.0 - trial.q.get(), 0).expect("hedge is allowed");
                        }
                        NextTrial::Done => break,
                    }
                }
            }
        }
    }
});
