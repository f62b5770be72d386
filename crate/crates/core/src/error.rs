use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must lie in [0, 1], got {value}")]
    OutOfUnitInterval { what: &'static str, value: f64 },

    #[error("invalid belief interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid utility scale: {0}")]
    InvalidScale(String),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("invalid second-order distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid second-order utility: {0}")]
    InvalidUtility(String),

    #[error("invalid probability weighting: {0}")]
    InvalidWeighting(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("probabilistically sophisticated models are only defined on the choice triple, not for continuous mixing")]
    ProbSophContinuousUnsupported,

    #[error("second-order utility has nonpositive derivative {derivative} at z = {z}")]
    NonpositiveDerivative { z: f64, derivative: f64 },

    #[error("model `{0}` is not supported by this operation")]
    UnsupportedModel(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid observations: {0}")]
    InvalidObservations(String),

    #[error("inconsistent observations: lower bound {lower} exceeds upper bound {upper}")]
    InconsistentObservations { lower: f64, upper: f64 },

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("infeasible bounds at threshold {threshold}: monotonized lower {lower} exceeds upper {upper}")]
    InfeasibleBounds { threshold: f64, lower: f64, upper: f64 },

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error("invalid figure parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("model is not serializable: {0}")]
    NotSerializable(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
