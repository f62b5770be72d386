use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),

    #[error("no session with id `{0}`")]
    UnknownSession(String),

    #[error("no trial with id {0} in this session")]
    UnknownTrial(u32),

    #[error("choice out of range: {0}")]
    OutOfRange(String),

    #[error("trial {trial_id} already answered with x = {recorded}, got x = {submitted}")]
    DuplicateConflicting { trial_id: u32, recorded: f64, submitted: f64 },

    #[error("{pending} trial(s) still to be answered")]
    UnresolvedTrials { pending: usize },

    #[error("no realization given for topic `{0}`")]
    MissingRealization(String),

    #[error("session is already resolved")]
    SessionClosed,

    #[error("model cannot be simulated: {0}")]
    UnsupportedModel(String),

    #[error("malformed request: {0}")]
    InvalidRequest(String),

    #[error("session log is corrupt: {0}")]
    CorruptLog(String),

    #[error(transparent)]
    Core(#[from] mixbet_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name, used as the `code` of API errors.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid-config",
            Error::UnknownSession(_) => "unknown-session",
            Error::UnknownTrial(_) => "unknown-trial",
            Error::OutOfRange(_) => "out-of-range",
            Error::DuplicateConflicting { .. } => "duplicate-conflicting",
            Error::UnresolvedTrials { .. } => "unresolved-trials",
            Error::MissingRealization(_) => "missing-realization",
            Error::SessionClosed => "session-closed",
            Error::UnsupportedModel(_) => "unsupported-model",
            Error::InvalidRequest(_) => "invalid-request",
            Error::CorruptLog(_) => "corrupt-log",
            Error::Core(_) => "invalid-input",
            Error::Io(_) => "io-error",
        }
    }
}
