//! Plot-ready datasets for the standard figures and the limit studies.
//!
//! Every dataset records the full parameter set it was computed from, and
//! output is deterministic: the same name, parameters and code version give
//! byte-identical CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::CostFunction;
use crate::distribution::SecondOrderDistribution;
use crate::envelope::{build_envelope, ThresholdBounds};
use crate::error::{Error, Result};
use crate::identify::{
    mixing_interval, refine_schedule_with, ChoiceMode, Observation, ObservationSet, RefineOptions, NOISELESS_MIXING_EPS,
};
use crate::model::{choice_triple_values, PreferenceModel};
use crate::phi::SecondOrderUtility;
use crate::solver::best_response;
use crate::units::{BeliefInterval, OddsQuota, UtilityScale};
use crate::weighting::ProbWeighting;

/// Grid step in the threshold coordinate `v = 1 - q`.
pub const FIGURE_GRID: f64 = 1e-3;
/// Endpoint resolution reached by the convergence studies.
pub const CONVERGENCE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureName {
    Fig1Values,
    Fig2Inference,
    Fig3Seu,
    Fig4Maxmin,
    Fig5Variational,
    Fig6SecondOrder,
    Fig7Envelope,
    Convergence,
}

impl FigureName {
    pub const ALL: [FigureName; 8] = [
        FigureName::Fig1Values,
        FigureName::Fig2Inference,
        FigureName::Fig3Seu,
        FigureName::Fig4Maxmin,
        FigureName::Fig5Variational,
        FigureName::Fig6SecondOrder,
        FigureName::Fig7Envelope,
        FigureName::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureName::Fig1Values => "fig1-values",
            FigureName::Fig2Inference => "fig2-inference",
            FigureName::Fig3Seu => "fig3-seu",
            FigureName::Fig4Maxmin => "fig4-maxmin",
            FigureName::Fig5Variational => "fig5-variational",
            FigureName::Fig6SecondOrder => "fig6-second-order",
            FigureName::Fig7Envelope => "fig7-envelope",
            FigureName::Convergence => "convergence",
        }
    }
}

impl fmt::Display for FigureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureName::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureDataset {
    pub name: FigureName,
    pub parameters: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FigureDataset {
    fn new(name: FigureName, parameters: BTreeMap<String, String>, columns: Vec<String>) -> Self {
        Self { name, parameters, columns, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV preceded by a `# name=... key=value ...` comment line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# name={}", self.name);
        for (k, v) in &self.parameters {
            out.push_str(&format!(" {k}={v}"));
        }
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parameter lookup that records every value used, defaults included, and
/// rejects keys the figure does not know.
struct Params<'a> {
    given: &'a BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    fn new(given: &'a BTreeMap<String, String>) -> Self {
        Self { given, used: BTreeMap::new() }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let value = match self.given.get(key) {
            Some(raw) => parse_f64(key, raw)?,
            None => default,
        };
        self.used.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let values = match self.given.get(key) {
            Some(raw) => raw.split(',').map(|s| parse_f64(key, s.trim())).collect::<Result<Vec<_>>>()?,
            None => default.to_vec(),
        };
        if values.is_empty() {
            return Err(Error::InvalidParameter { key: key.into(), reason: "empty list".into() });
        }
        let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.used.insert(key.to_string(), text.join(","));
        Ok(values)
    }

    fn word(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String> {
        let value = self.given.get(key).map(String::as_str).unwrap_or(default);
        if !allowed.contains(&value) {
            return Err(Error::InvalidParameter {
                key: key.into(),
                reason: format!("expected one of {}, got `{value}`", allowed.join(", ")),
            });
        }
        self.used.insert(key.to_string(), value.to_string());
        Ok(value.to_string())
    }

    fn finish(self) -> Result<BTreeMap<String, String>> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains_key(*k)) {
            return Err(Error::InvalidParameter { key: k.clone(), reason: "not a parameter of this figure".into() });
        }
        Ok(self.used)
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidParameter { key: key.into(), reason: format!("`{raw}` is not a finite number") })
}

/// Points `0, step, ..., 1` in the threshold coordinate.
fn threshold_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn quota(v: f64) -> OddsQuota {
    OddsQuota::saturating(1.0 - v)
}

fn fmt_list(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

/// Dataset for a named figure; missing parameters take the standard defaults.
pub fn figure_dataset(name: FigureName, params: &BTreeMap<String, String>) -> Result<FigureDataset> {
    match name {
        FigureName::Fig1Values => fig1_values(params),
        FigureName::Fig2Inference => fig2_inference(params),
        FigureName::Fig3Seu => {
            let mut p = Params::new(params);
            let model = PreferenceModel::seu(p.f64("p", 0.3)?)?;
            response_table(name, &model, p)
        }
        FigureName::Fig4Maxmin => {
            let mut p = Params::new(params);
            let model = PreferenceModel::maxmin(p.f64("a", 0.1)?, p.f64("b", 0.8)?)?;
            response_table(name, &model, p)
        }
        FigureName::Fig5Variational => fig5_variational(params),
        FigureName::Fig6SecondOrder => fig6_second_order(params),
        FigureName::Fig7Envelope => fig7_envelope(params),
        FigureName::Convergence => {
            let mut p = Params::new(params);
            let family = p.word("family", "second-order", &["variational", "second-order"])?;
            let family = if family == "variational" { StudyFamily::Variational } else { StudyFamily::SecondOrder };
            let sequence = p.list("u_delta", &DEFAULT_U_DELTAS)?;
            study(family, p, &sequence)
        }
    }
}

/// Columns `v, q, x_lo, x_hi, canonical_x` on the threshold grid.
fn response_table(name: FigureName, model: &PreferenceModel, p: Params) -> Result<FigureDataset> {
    let mut params = p.finish()?;
    params.insert("grid".into(), FIGURE_GRID.to_string());
    let columns = ["v", "q", "x_lo", "x_hi", "canonical_x"].map(String::from).to_vec();
    let mut ds = FigureDataset::new(name, params, columns);
    let scale = UtilityScale::default();
    for v in threshold_grid(FIGURE_GRID) {
        let q = quota(v);
        let r = best_response(model, q, &scale)?;
        let (lo, hi) = r.bounds();
        ds.rows.push(vec![v, q.get(), lo, hi, r.canonical(q).get()]);
    }
    Ok(ds)
}

fn fig1_values(params: &BTreeMap<String, String>) -> Result<FigureDataset> {
    let mut p = Params::new(params);
    let belief = p.f64("p", 0.3)?;
    let alpha = p.f64("alpha", 0.75)?;
    let a = p.f64("a", 0.2)?;
    let b = p.f64("b", 0.4)?;
    let mut parameters = p.finish()?;
    parameters.insert("grid".into(), FIGURE_GRID.to_string());
    let panels = [
        ("seu", PreferenceModel::seu(belief)?),
        ("prob_soph", PreferenceModel::prob_soph(belief, ProbWeighting::prelec(alpha)?)?),
        ("maxmin", PreferenceModel::maxmin(a, b)?),
    ];
    let mut columns = vec!["v".to_string(), "q".to_string()];
    for (label, _) in &panels {
        for act in ["event", "complement", "mix"] {
            columns.push(format!("{label}_{act}"));
        }
    }
    let mut ds = FigureDataset::new(FigureName::Fig1Values, parameters, columns);
    let scale = UtilityScale::default();
    for v in threshold_grid(FIGURE_GRID) {
        let q = quota(v);
        let mut row = vec![v, q.get()];
        for (_, model) in &panels {
            let t = choice_triple_values(model, q, &scale)?;
            row.extend([t.event, t.complement, t.mix]);
        }
        ds.rows.push(row);
    }
    Ok(ds)
}

fn fig2_inference(params: &BTreeMap<String, String>) -> Result<FigureDataset> {
    let mut p = Params::new(params);
    let model = PreferenceModel::maxmin(p.f64("a", 0.15)?, p.f64("b", 0.45)?)?;
    let points = p.f64("points", 11.0)?;
    if !(points >= 2.0 && points.fract() == 0.0) {
        return Err(Error::InvalidParameter { key: "points".into(), reason: "need an integer of at least 2".into() });
    }
    let mut parameters = p.finish()?;
    let n = points as usize - 1;
    let columns = ["q", "v", "canonical_x", "mixing"].map(String::from).to_vec();
    let scale = UtilityScale::default();
    let mut rows = Vec::new();
    let mut obs = ObservationSet::default();
    for i in 0..=n {
        let q = OddsQuota::saturating(i as f64 / n as f64);
        let x = best_response(&model, q, &scale)?.canonical(q);
        let record = Observation { q, x, mode: ChoiceMode::Continuous };
        obs.push(record)?;
        let mixing = NOISELESS_MIXING_EPS < x.get() && x.get() < 1.0 - NOISELESS_MIXING_EPS;
        rows.push(vec![q.get(), 1.0 - q.get(), x.get(), f64::from(u8::from(mixing))]);
    }
    let res = mixing_interval(&obs, NOISELESS_MIXING_EPS)?;
    if let Some(m) = res.interval {
        parameters.insert("m_lo".into(), m.lower().to_string());
        parameters.insert("m_hi".into(), m.upper().to_string());
    }
    let mut ds = FigureDataset::new(FigureName::Fig2Inference, parameters, columns);
    ds.rows = rows;
    Ok(ds)
}

fn fig5_variational(params: &BTreeMap<String, String>) -> Result<FigureDataset> {
    let mut p = Params::new(params);
    let beliefs = BeliefInterval::new(p.f64("a", 0.1)?, p.f64("b", 0.8)?)?;
    let entropy = p.list("entropy_theta", &[0.1, 0.5, 1.5])?;
    let reference = p.f64("reference", 0.5)?;
    let power = p.list("power_theta", &[1.0, 10.0, 100.0])?;
    let center = p.f64("center", 0.5)?;
    let exponent = p.f64("exponent", 4.0)?;
    let scale = UtilityScale::from_delta(0.0, p.f64("u_delta", 1.0)?)?;
    let parameters = p.finish()?;
    let mut curves = Vec::new();
    for t in &entropy {
        curves.push((format!("entropy_{t}"), CostFunction::multiplier_entropy(beliefs, *t, reference)?));
    }
    for t in &power {
        curves.push((format!("power_{t}"), CostFunction::power(beliefs, *t, center, exponent)?));
    }
    let models: Vec<(String, PreferenceModel)> =
        curves.into_iter().map(|(n, c)| (n, PreferenceModel::variational(c))).collect();
    curve_table(FigureName::Fig5Variational, parameters, &models, &scale)
}

fn fig6_second_order(params: &BTreeMap<String, String>) -> Result<FigureDataset> {
    let mut p = Params::new(params);
    let distribution = SecondOrderDistribution::uniform(p.f64("a", 0.1)?, p.f64("b", 0.8)?)?;
    let thetas = p.list("theta", &[1.0, 4.0, 16.0])?;
    let scale = UtilityScale::from_delta(0.0, p.f64("u_delta", 1.0)?)?;
    let parameters = p.finish()?;
    let models = thetas
        .iter()
        .map(|t| {
            let phi = SecondOrderUtility::cara(*t)?;
            Ok((format!("cara_{t}"), PreferenceModel::second_order(distribution.clone(), phi)))
        })
        .collect::<Result<Vec<_>>>()?;
    curve_table(FigureName::Fig6SecondOrder, parameters, &models, &scale)
}

/// Columns `v, q` and one canonical response column per model.
fn curve_table(
    name: FigureName,
    mut parameters: BTreeMap<String, String>,
    models: &[(String, PreferenceModel)],
    scale: &UtilityScale,
) -> Result<FigureDataset> {
    parameters.insert("grid".into(), FIGURE_GRID.to_string());
    let mut columns = vec!["v".to_string(), "q".to_string()];
    columns.extend(models.iter().map(|(n, _)| n.clone()));
    let mut ds = FigureDataset::new(name, parameters, columns);
    for v in threshold_grid(FIGURE_GRID) {
        let q = quota(v);
        let mut row = vec![v, q.get()];
        for (_, m) in models {
            row.push(best_response(m, q, scale)?.canonical(q).get());
        }
        ds.rows.push(row);
    }
    Ok(ds)
}

fn fig7_envelope(params: &BTreeMap<String, String>) -> Result<FigureDataset> {
    let mut p = Params::new(params);
    let lower_clamp = p.f64("lower_clamp", 0.0)?;
    let upper_clamp = p.f64("upper_clamp", 10.0)?;
    let thresholds = p.list("thresholds", &[2.5, 5.0, 7.5])?;
    let lo = p.list("lo", &[0.1, 0.3, 0.7])?;
    let hi = p.list("hi", &[0.3, 0.6, 0.9])?;
    let parameters = p.finish()?;
    if lo.len() != thresholds.len() || hi.len() != thresholds.len() {
        return Err(Error::InvalidParameter {
            key: "thresholds".into(),
            reason: "thresholds, lo and hi need equal lengths".into(),
        });
    }
    let tb = ThresholdBounds::new(thresholds, lo.into_iter().zip(hi).collect())?
        .with_clamps(Some(lower_clamp), Some(upper_clamp))?;
    let env = build_envelope(&tb)?;
    let columns = ["y", "lower", "upper"].map(String::from).to_vec();
    let mut ds = FigureDataset::new(FigureName::Fig7Envelope, parameters, columns);
    let n = 1000;
    let span = upper_clamp - lower_clamp;
    for i in 0..=n {
        let y = lower_clamp + span * i as f64 / n as f64;
        ds.rows.push(vec![y, env.lower_at(y), env.upper_at(y)]);
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyFamily {
    Variational,
    SecondOrder,
}

pub const DEFAULT_U_DELTAS: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

/// Distance of the mixing interval `M` from the belief interval `B` as the
/// utility spread grows.
///
/// For each `u_delta`, responses on the `1e-3` threshold grid give a first
/// `M`, whose endpoints are then refined by bisection to `1e-6`. Parameters:
/// `a`, `b`, and for variational families `cost` (`power` or `entropy`)
/// with `theta`, `center`, `exponent` or `reference`; for second-order
/// families `phi` (`cara` or `linear`) with `theta`.
pub fn convergence_study(
    family: StudyFamily,
    params: &BTreeMap<String, String>,
    u_deltas: &[f64],
) -> Result<FigureDataset> {
    study(family, Params::new(params), u_deltas)
}

fn study(family: StudyFamily, mut p: Params, u_deltas: &[f64]) -> Result<FigureDataset> {
    if u_deltas.is_empty() || u_deltas.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
        return Err(Error::InvalidParameter { key: "u_delta".into(), reason: "need positive finite values".into() });
    }
    if u_deltas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter { key: "u_delta".into(), reason: "sequence must be increasing".into() });
    }
    let beliefs = BeliefInterval::new(p.f64("a", 0.1)?, p.f64("b", 0.8)?)?;
    let model = match family {
        StudyFamily::Variational => {
            let cost = match p.word("cost", "power", &["power", "entropy"])?.as_str() {
                "power" => {
                    CostFunction::power(beliefs, p.f64("theta", 1.0)?, p.f64("center", 0.5)?, p.f64("exponent", 4.0)?)?
                }
                _ => CostFunction::multiplier_entropy(beliefs, p.f64("theta", 0.5)?, p.f64("reference", 0.5)?)?,
            };
            PreferenceModel::variational(cost)
        }
        StudyFamily::SecondOrder => {
            let distribution = SecondOrderDistribution::uniform(beliefs.lower(), beliefs.upper())?;
            let phi = match p.word("phi", "cara", &["cara", "linear"])?.as_str() {
                "cara" => SecondOrderUtility::cara(p.f64("theta", 4.0)?)?,
                _ => SecondOrderUtility::linear(),
            };
            PreferenceModel::second_order(distribution, phi)
        }
    };
    let mut parameters = p.finish()?;
    parameters.insert(
        "family".into(),
        match family {
            StudyFamily::Variational => "variational",
            StudyFamily::SecondOrder => "second-order",
        }
        .into(),
    );
    parameters.insert("u_delta".into(), fmt_list(u_deltas).join(","));
    parameters.insert("grid".into(), FIGURE_GRID.to_string());
    parameters.insert("refined_gap".into(), CONVERGENCE_GAP.to_string());
    let columns = ["u_delta", "m_lo", "m_hi", "distance"].map(String::from).to_vec();
    let mut ds = FigureDataset::new(FigureName::Convergence, parameters, columns);
    for &u in u_deltas {
        let scale = UtilityScale::from_delta(0.0, u)?;
        let m = refined_mixing_interval(&model, &scale)?.ok_or_else(|| Error::InvalidParameter {
            key: "u_delta".into(),
            reason: format!("no mixing observed at u_delta = {u}; distance to B is undefined"),
        })?;
        ds.rows.push(vec![u, m.lower(), m.upper(), m.hausdorff(&beliefs)]);
    }
    Ok(ds)
}

/// Mixing interval from noiseless responses on the threshold grid, with
/// both endpoints refined by bisection to [`CONVERGENCE_GAP`].
pub fn refined_mixing_interval(model: &PreferenceModel, scale: &UtilityScale) -> Result<Option<BeliefInterval>> {
    let mut obs = ObservationSet::default();
    let record = |obs: &mut ObservationSet, q: OddsQuota| -> Result<()> {
        let x = best_response(model, q, scale)?.canonical(q);
        obs.push(Observation { q, x, mode: ChoiceMode::Continuous })
    };
    for v in threshold_grid(FIGURE_GRID) {
        record(&mut obs, quota(v))?;
    }
    let opts = RefineOptions { min_gap: CONVERGENCE_GAP, eps: NOISELESS_MIXING_EPS };
    if mixing_interval(&obs, opts.eps)?.interval.is_some() {
        loop {
            let probes = refine_schedule_with(&obs, 2, &opts);
            if probes.is_empty() {
                break;
            }
            for q in probes {
                record(&mut obs, q)?;
            }
        }
    }
    Ok(mixing_interval(&obs, opts.eps)?.interval)
}
