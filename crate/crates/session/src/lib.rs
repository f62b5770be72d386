//! Elicitation sessions for mixing bets.
//!
//! A session walks a subject through trials at chosen odds, records the
//! allocations, and finally pays one randomly selected trial by lottery.
//! [`Session`] is the pure state machine; [`SessionStore`] persists sessions
//! as append-only ndjson logs; [`http`] exposes the store as a JSON API.
//! [`simulate`] lets preference models play sessions for testing the
//! identification pipeline end to end.

pub mod config;
pub mod error;
pub mod http;
pub mod session;
pub mod simulate;
pub mod store;

pub use config::{Prize, Schedule, SessionConfig, Topic};
pub use error::{Error, Result};
pub use session::{
    draw_resolution, lottery_payout, AllowedChoices, ChoiceAck, NextTrial, ResolutionAudit, ResolutionRecord, Session,
    SessionEvent, Trial, TrialStatus,
};
pub use simulate::{play_session, play_session_as, respond, simulate_subject, ResponseNoise};
pub use store::SessionStore;
