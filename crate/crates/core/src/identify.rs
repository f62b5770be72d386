//! Recovering belief intervals from observed mixing choices.
//!
//! An agent who strictly mixes at odds `q` reveals that `v = 1 - q` lies in
//! her belief interval, so the smallest interval `M` containing every such
//! `v` is an inner bound on `B`. Two or more distinct mixing thresholds
//! certify ambiguity. Corner choices give outer evidence instead: `x = 1`
//! at `v` means the relevant beliefs reach above `v`, `x = 0` that they
//! reach below it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{BeliefInterval, MixingChoice, OddsQuota, Probability};

/// Default margin for treating a continuous allocation as interior.
pub const DEFAULT_MIXING_EPS: f64 = 0.01;
/// Margin for noiseless (simulated) responses.
pub const NOISELESS_MIXING_EPS: f64 = 1e-9;
/// Tolerance for recognizing the three allowed triple-mode allocations.
pub const TRIPLE_TOL: f64 = 1e-9;
/// Refinement stops once the unresolved gap is narrower than this.
pub const DEFAULT_MIN_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChoiceMode {
    #[default]
    Continuous,
    /// Allocation restricted to `{0, 1 - q, 1}`.
    Triple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub q: OddsQuota,
    pub x: MixingChoice,
    #[serde(default)]
    pub mode: ChoiceMode,
}

impl Observation {
    pub fn new(q: f64, x: f64, mode: ChoiceMode) -> Result<Self> {
        Ok(Self { q: OddsQuota::new(q)?, x: MixingChoice::new(x)?, mode })
    }

    /// The threshold `1 - q` this record speaks about.
    pub fn threshold(&self) -> f64 {
        1.0 - self.q.get()
    }

    fn is_mixing(&self, eps: f64) -> bool {
        let x = self.x.get();
        match self.mode {
            ChoiceMode::Continuous => eps < x && x < 1.0 - eps,
            // At q = 0 or 1 the hedge coincides with a corner and reveals nothing.
            ChoiceMode::Triple => {
                let v = self.threshold();
                0.0 < v && v < 1.0 && (x - v).abs() <= TRIPLE_TOL
            }
        }
    }

    fn is_event_bet(&self, eps: f64) -> bool {
        !self.is_mixing(eps) && self.x.get() >= 1.0 - eps.max(TRIPLE_TOL)
    }

    fn is_complement_bet(&self, eps: f64) -> bool {
        !self.is_mixing(eps) && self.x.get() <= eps.max(TRIPLE_TOL)
    }
}

/// Validated choice records with distinct odds quotas.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservations")]
pub struct ObservationSet {
    records: Vec<Observation>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawObservations {
    Wrapped { records: Vec<Observation> },
    Bare(Vec<Observation>),
}

impl TryFrom<RawObservations> for ObservationSet {
    type Error = Error;

    fn try_from(raw: RawObservations) -> Result<Self> {
        match raw {
            RawObservations::Wrapped { records } | RawObservations::Bare(records) => Self::new(records),
        }
    }
}

#[derive(Deserialize)]
struct CsvRow {
    q: f64,
    x: f64,
    #[serde(default)]
    mode: Option<ChoiceMode>,
}

impl ObservationSet {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        let mut set = Self { records: Vec::with_capacity(records.len()) };
        for r in records {
            set.push(r)?;
        }
        Ok(set)
    }

    /// Appends a record. Triple-mode allocations are snapped to the exact
    /// values `{0, 1 - q, 1}`.
    pub fn push(&mut self, mut obs: Observation) -> Result<()> {
        if self.records.iter().any(|r| r.q == obs.q) {
            return Err(Error::InvalidObservations(format!("duplicate odds quota q = {}", obs.q)));
        }
        if obs.mode == ChoiceMode::Triple {
            obs.x = snap_triple(obs.q, obs.x.get()).ok_or_else(|| {
                Error::InvalidObservations(format!(
                    "triple-mode allocation {} at q = {} is not one of 0, 1 - q, 1",
                    obs.x, obs.q
                ))
            })?;
        }
        self.records.push(obs);
        Ok(())
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains_quota(&self, q: OddsQuota) -> bool {
        self.records.iter().any(|r| r.q == q)
    }

    /// Parses CSV with a header row and columns `q`, `x`, and optionally
    /// `mode`. Lines starting with `#` are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = Vec::new();
        for row in reader.deserialize::<CsvRow>() {
            let row = row?;
            records.push(Observation::new(row.q, row.x, row.mode.unwrap_or_default())?);
        }
        Self::new(records)
    }

    /// One JSON record per line; blank lines are skipped.
    pub fn from_ndjson(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_str::<Observation>(l).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Self::new(records)
    }

    /// A JSON array of records or an object `{"records": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,x,mode\n");
        for r in &self.records {
            let mode = match r.mode {
                ChoiceMode::Continuous => "continuous",
                ChoiceMode::Triple => "triple",
            };
            let _ = writeln!(out, "{},{},{}", r.q, r.x, mode);
        }
        out
    }

    pub fn to_ndjson(&self) -> String {
        self.records.iter().map(|r| serde_json::to_string(r).expect("observations serialize") + "\n").collect()
    }
}

/// The triple option within [`TRIPLE_TOL`] of `x`, stored exactly as `0`,
/// `1 - q` or `1`.
pub fn snap_triple(q: OddsQuota, x: f64) -> Option<MixingChoice> {
    let hedge = 1.0 - q.get();
    if (x - hedge).abs() <= TRIPLE_TOL {
        Some(MixingChoice::saturating(hedge))
    } else if x.abs() <= TRIPLE_TOL {
        Some(MixingChoice::ZERO)
    } else if (x - 1.0).abs() <= TRIPLE_TOL {
        Some(MixingChoice::ONE)
    } else {
        None
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..0.5).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidParameter { key: "eps".into(), reason: format!("must lie in [0, 0.5), got {eps}") })
    }
}

/// Thresholds `1 - q` at which the recorded choice is a strict mixture, ascending.
pub fn mixing_points(obs: &ObservationSet, eps: f64) -> Result<Vec<Probability>> {
    check_eps(eps)?;
    let mut points: Vec<f64> = obs.records.iter().filter(|r| r.is_mixing(eps)).map(Observation::threshold).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    Ok(points.into_iter().map(Probability::saturating).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingIntervalResult {
    /// Smallest interval containing every mixing threshold; `None` without mixing.
    pub interval: Option<BeliefInterval>,
    pub mixing_points: Vec<Probability>,
    /// At least two distinct mixing thresholds.
    pub ambiguous: bool,
}

impl MixingIntervalResult {
    pub fn from_points(mixing_points: Vec<Probability>) -> Self {
        let interval = match (mixing_points.first(), mixing_points.last()) {
            (Some(lo), Some(hi)) => BeliefInterval::new(lo.get(), hi.get()).ok(),
            _ => None,
        };
        let ambiguous = mixing_points.len() >= 2;
        Self { interval, mixing_points, ambiguous }
    }
}

/// Inner bound `M` on the belief interval.
pub fn mixing_interval(obs: &ObservationSet, eps: f64) -> Result<MixingIntervalResult> {
    Ok(MixingIntervalResult::from_points(mixing_points(obs, eps)?))
}

/// Outer evidence from corner choices: the largest threshold at which the
/// agent bet everything on the event and the smallest at which they bet
/// everything on the complement.
pub fn point_belief_bounds(obs: &ObservationSet) -> Result<(Probability, Probability)> {
    let eps = DEFAULT_MIXING_EPS;
    let lower = obs.records.iter().filter(|r| r.is_event_bet(eps)).map(Observation::threshold).fold(0.0, f64::max);
    let upper = obs.records.iter().filter(|r| r.is_complement_bet(eps)).map(Observation::threshold).fold(1.0, f64::min);
    if lower > upper {
        return Err(Error::InconsistentObservations { lower, upper });
    }
    Ok((Probability::saturating(lower), Probability::saturating(upper)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Gaps narrower than this are considered resolved.
    pub min_gap: f64,
    /// Mixing-detection margin for continuous records.
    pub eps: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { min_gap: DEFAULT_MIN_GAP, eps: DEFAULT_MIXING_EPS }
    }
}

/// Next odds to probe, with default options.
pub fn refine_schedule(obs: &ObservationSet, budget: usize) -> Vec<OddsQuota> {
    refine_schedule_with(obs, budget, &RefineOptions::default())
}

/// Up to `budget` new odds quotas, ascending in `1 - q`.
///
/// With mixing observed, the gaps between the outermost mixing thresholds
/// and the nearest non-mixing thresholds beyond them (or 0 and 1) are
/// split evenly, wider gaps first. Without mixing, the gap between the
/// evidence for "belief above" and "belief below" is filled uniformly.
pub fn refine_schedule_with(obs: &ObservationSet, budget: usize, opts: &RefineOptions) -> Vec<OddsQuota> {
    let eps = opts.eps.clamp(0.0, 0.5 - f64::EPSILON);
    let mixing: Vec<f64> = obs.records.iter().filter(|r| r.is_mixing(eps)).map(Observation::threshold).collect();
    let others: Vec<f64> = obs.records.iter().filter(|r| !r.is_mixing(eps)).map(Observation::threshold).collect();

    let gaps: Vec<(f64, f64)> = if mixing.is_empty() {
        let above = obs.records.iter().filter(|r| r.is_event_bet(eps)).map(Observation::threshold).fold(0.0, f64::max);
        let below =
            obs.records.iter().filter(|r| r.is_complement_bet(eps)).map(Observation::threshold).fold(1.0, f64::min);
        vec![(above.min(below), above.max(below))]
    } else {
        let m_lo = mixing.iter().copied().fold(f64::INFINITY, f64::min);
        let m_hi = mixing.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let left = others.iter().copied().filter(|v| *v < m_lo).fold(0.0, f64::max);
        let right = others.iter().copied().filter(|v| *v > m_hi).fold(1.0, f64::min);
        vec![(left, m_lo), (m_hi, right)]
    };
    let gaps: Vec<(f64, f64)> = gaps.into_iter().filter(|(lo, hi)| hi - lo >= opts.min_gap).collect();

    // Hand out probes one at a time to the gap with the widest resulting spacing.
    let mut counts = vec![0usize; gaps.len()];
    for _ in 0..budget {
        let pick = (0..gaps.len()).max_by(|&i, &j| {
            let wi = (gaps[i].1 - gaps[i].0) / (counts[i] + 1) as f64;
            let wj = (gaps[j].1 - gaps[j].0) / (counts[j] + 1) as f64;
            wi.total_cmp(&wj).then(j.cmp(&i))
        });
        match pick {
            Some(i) => counts[i] += 1,
            None => break,
        }
    }

    let mut probes: Vec<f64> = Vec::with_capacity(budget);
    for ((lo, hi), k) in gaps.iter().zip(&counts) {
        for j in 1..=*k {
            probes.push(lo + (hi - lo) * j as f64 / (*k + 1) as f64);
        }
    }
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    probes.into_iter().map(|v| OddsQuota::saturating(1.0 - v)).filter(|q| !obs.contains_quota(*q)).collect()
}

pub fn interval_midpoint(res: &MixingIntervalResult) -> Option<Probability> {
    res.interval.map(|i| Probability::saturating(i.midpoint()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub topic: String,
    pub subjects: usize,
    /// Share of subjects with an ambiguous verdict.
    pub ambiguity_ratio: f64,
    /// Mean interval midpoint over subjects with at least one mixing choice.
    pub mean_midpoint: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortTable {
    pub rows: Vec<CohortRow>,
}

impl CohortTable {
    pub fn row(&self, topic: &str) -> Option<&CohortRow> {
        self.rows.iter().find(|r| r.topic == topic)
    }

    /// CSV with columns `topic, subjects, ambiguity_ratio, mean_midpoint`;
    /// an undefined midpoint is left empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["topic", "subjects", "ambiguity_ratio", "mean_midpoint"])?;
        for r in &self.rows {
            let mid = r.mean_midpoint.map(|m| m.to_string()).unwrap_or_default();
            writer.write_record([r.topic.clone(), r.subjects.to_string(), r.ambiguity_ratio.to_string(), mid])?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Per-topic ambiguity ratio and mean midpoint. Topics are listed in
/// lexicographic order.
pub fn cohort_summary<S: AsRef<str>>(results: &[MixingIntervalResult], labels: &[S]) -> Result<CohortTable> {
    if results.len() != labels.len() {
        return Err(Error::InvalidObservations(format!("{} results but {} topic labels", results.len(), labels.len())));
    }
    #[derive(Default)]
    struct Acc {
        subjects: usize,
        ambiguous: usize,
        midpoints: Vec<f64>,
    }
    let mut by_topic: BTreeMap<&str, Acc> = BTreeMap::new();
    for (res, label) in results.iter().zip(labels) {
        let acc = by_topic.entry(label.as_ref()).or_default();
        acc.subjects += 1;
        acc.ambiguous += usize::from(res.ambiguous);
        if let Some(m) = interval_midpoint(res) {
            acc.midpoints.push(m.get());
        }
    }
    let rows = by_topic
        .into_iter()
        .map(|(topic, acc)| CohortRow {
            topic: topic.to_string(),
            subjects: acc.subjects,
            ambiguity_ratio: acc.ambiguous as f64 / acc.subjects as f64,
            mean_midpoint: (!acc.midpoints.is_empty())
                .then(|| acc.midpoints.iter().sum::<f64>() / acc.midpoints.len() as f64),
        })
        .collect();
    Ok(CohortTable { rows })
}
