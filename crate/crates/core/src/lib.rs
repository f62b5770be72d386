//! Mixing bets for eliciting ambiguous beliefs about binary events.
//!
//! An agent splits lottery tickets between an event `E` and its complement;
//! tickets on `E` are scaled by an odds quota `q`, tickets on the complement
//! by `1 - q`. Agents with a single belief `p` never strictly prefer a
//! mixture, while ambiguity-averse agents mix exactly when the threshold
//! `1 - q` falls inside their belief interval. This crate computes those
//! best responses for several preference classes, recovers belief
//! intervals from observed choices, and extends the idea to CDF envelopes
//! for real-valued variables.

// `!(x > 0.0)` is how validation rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod distribution;
pub mod envelope;
pub mod error;
pub mod identify;
pub mod model;
pub mod optimize;
pub mod phi;
pub mod quadrature;
pub mod report;
pub mod scoring;
pub mod solver;
pub mod units;
pub mod weighting;

pub use cost::{CostFunction, CostKind, CostSpec};
pub use distribution::{DistributionKind, DistributionSpec, SecondOrderDistribution};
pub use envelope::{build_envelope, is_consistent, CdfEnvelope, ThresholdBounds};
pub use error::{Error, Result};
pub use identify::{
    cohort_summary, interval_midpoint, mixing_interval, mixing_points, point_belief_bounds, refine_schedule,
    refine_schedule_with, ChoiceMode, CohortRow, CohortTable, MixingIntervalResult, Observation, ObservationSet,
    RefineOptions,
};
pub use model::{choice_triple_values, model_value, ModelSpec, PreferenceModel, TripleChoice, TripleValues};
pub use phi::{ambiguity_coefficient, PhiKind, PhiSpec, SecondOrderUtility};
pub use report::{convergence_study, figure_dataset, refined_mixing_interval, FigureDataset, FigureName, StudyFamily};
pub use scoring::{binarized_value, expected_score, score};
pub use solver::{
    best_response, best_response_maxmin, best_response_second_order, best_response_seu, best_response_variational,
    mixing_curve, oracle_best_response, uniform_odds_grid, MixingCurve, MixingCurveEntry, OptimalMixing,
};
pub use units::{BeliefInterval, MixingChoice, OddsQuota, Probability, Score, UtilityScale};
pub use weighting::ProbWeighting;
