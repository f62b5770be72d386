//! CDF envelopes for real-valued variables.
//!
//! Eliciting a belief interval `[lo_i, hi_i]` for each event `Y <= c_i`
//! bounds every CDF the agent considers relevant at the thresholds. Between
//! thresholds only monotonicity is known, so the tightest bounds are step
//! functions: `lower(y) = max{lo_i : c_i <= y}` and
//! `upper(y) = min{hi_i : c_i >= y}`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBounds {
    thresholds: Vec<f64>,
    intervals: Vec<(f64, f64)>,
    /// Known minimum of the variable: `F(y) = 0` for `y` below it.
    lower_clamp: Option<f64>,
    /// Known maximum of the variable: `F(y) = 1` from it on.
    upper_clamp: Option<f64>,
}

#[derive(Deserialize)]
struct CsvRow {
    c: f64,
    lo: f64,
    hi: f64,
}

impl ThresholdBounds {
    pub fn new(thresholds: Vec<f64>, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if thresholds.is_empty() || thresholds.len() != intervals.len() {
            return Err(Error::InvalidThresholds(format!(
                "need matching nonempty thresholds and intervals, got {} and {}",
                thresholds.len(),
                intervals.len()
            )));
        }
        if let Some(c) = thresholds.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidThresholds(format!("threshold {c} is not finite")));
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidThresholds("thresholds must be strictly ascending".into()));
        }
        for (c, &(lo, hi)) in thresholds.iter().zip(&intervals) {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::InvalidThresholds(format!("interval ({lo}, {hi}) at c = {c} is not inside [0, 1]")));
            }
        }
        Ok(Self { thresholds, intervals, lower_clamp: None, upper_clamp: None })
    }

    /// Adds the support bounds `c <= Y <= C`.
    pub fn with_clamps(mut self, lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        if let Some(c) = lower {
            if !c.is_finite() || c > self.thresholds[0] {
                return Err(Error::InvalidThresholds(format!("lower clamp {c} must not exceed the first threshold")));
            }
        }
        if let Some(c) = upper {
            if !c.is_finite() || c < *self.thresholds.last().expect("nonempty") {
                return Err(Error::InvalidThresholds(format!("upper clamp {c} must not precede the last threshold")));
            }
        }
        if let (Some(lo), Some(hi)) = (lower, upper) {
            if lo >= hi {
                return Err(Error::InvalidThresholds(format!("clamps ({lo}, {hi}) are not ascending")));
            }
        }
        self.lower_clamp = lower;
        self.upper_clamp = upper;
        Ok(self)
    }

    /// CSV with header `c,lo,hi`; `#` lines are comments.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let (mut thresholds, mut intervals) = (Vec::new(), Vec::new());
        for row in reader.deserialize::<CsvRow>() {
            let row = row?;
            thresholds.push(row.c);
            intervals.push((row.lo, row.hi));
        }
        Self::new(thresholds, intervals)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn clamps(&self) -> (Option<f64>, Option<f64>) {
        (self.lower_clamp, self.upper_clamp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfEnvelope {
    thresholds: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    lower_clamp: Option<f64>,
    upper_clamp: Option<f64>,
}

/// Builds the envelope after repairing the raw bounds to the tightest
/// monotone relaxation: running max of `lo` from the left, running min of
/// `hi` from the right.
pub fn build_envelope(tb: &ThresholdBounds) -> Result<CdfEnvelope> {
    let n = tb.thresholds.len();
    let mut lower: Vec<f64> = tb.intervals.iter().map(|iv| iv.0).collect();
    let mut upper: Vec<f64> = tb.intervals.iter().map(|iv| iv.1).collect();
    for (i, &c) in tb.thresholds.iter().enumerate() {
        if tb.upper_clamp.is_some_and(|hi| c >= hi) {
            lower[i] = 1.0;
        }
        if tb.lower_clamp.is_some_and(|lo| c < lo) {
            upper[i] = 0.0;
        }
    }
    for i in 1..n {
        lower[i] = lower[i].max(lower[i - 1]);
    }
    for i in (0..n.saturating_sub(1)).rev() {
        upper[i] = upper[i].min(upper[i + 1]);
    }
    if let Some(i) = (0..n).find(|&i| lower[i] > upper[i]) {
        return Err(Error::InfeasibleBounds { threshold: tb.thresholds[i], lower: lower[i], upper: upper[i] });
    }
    Ok(CdfEnvelope {
        thresholds: tb.thresholds.clone(),
        lower,
        upper,
        lower_clamp: tb.lower_clamp,
        upper_clamp: tb.upper_clamp,
    })
}

impl CdfEnvelope {
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Largest CDF value forced at `y`. Right-continuous.
    pub fn lower_at(&self, y: f64) -> f64 {
        if self.upper_clamp.is_some_and(|hi| y >= hi) {
            return 1.0;
        }
        match self.thresholds.partition_point(|&c| c <= y) {
            0 => 0.0,
            i => self.lower[i - 1],
        }
    }

    /// Smallest CDF value allowed at `y`. Jumps occur just after each threshold.
    pub fn upper_at(&self, y: f64) -> f64 {
        if self.lower_clamp.is_some_and(|lo| y < lo) {
            return 0.0;
        }
        let i = self.thresholds.partition_point(|&c| c < y);
        self.upper.get(i).copied().unwrap_or(1.0)
    }

    /// Rows `(c, lower(c), upper(c))` at every threshold and clamp.
    pub fn breakpoints(&self) -> Vec<(f64, f64, f64)> {
        let mut points: Vec<f64> = self.lower_clamp.into_iter().chain(self.thresholds.iter().copied()).collect();
        points.extend(self.upper_clamp);
        points.dedup();
        points.into_iter().map(|c| (c, self.lower_at(c), self.upper_at(c))).collect()
    }

    pub fn breakpoints_csv(&self) -> String {
        let mut out = String::from("c,lower,upper\n");
        for (c, lo, hi) in self.breakpoints() {
            let _ = writeln!(out, "{c},{lo},{hi}");
        }
        out
    }
}

/// Whether CDF values at the envelope's thresholds stay within its bounds.
pub fn is_consistent(f_at_thresholds: &[f64], env: &CdfEnvelope) -> bool {
    f_at_thresholds.len() == env.thresholds.len()
        && env.thresholds.iter().zip(f_at_thresholds).all(|(&c, &f)| env.lower_at(c) <= f && f <= env.upper_at(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_bounds() -> ThresholdBounds {
        ThresholdBounds::new(vec![2.5, 5.0, 7.5], vec![(0.1, 0.3), (0.3, 0.6), (0.7, 0.9)])
            .unwrap()
            .with_clamps(Some(0.0), Some(10.0))
            .unwrap()
    }

    #[test]
    fn vacuous_single_threshold() {
        let env = build_envelope(&ThresholdBounds::new(vec![1.0], vec![(0.0, 1.0)]).unwrap()).unwrap();
        for y in [-5.0, 0.0, 1.0, 3.0] {
            assert_eq!(env.lower_at(y), 0.0);
            assert_eq!(env.upper_at(y), 1.0);
        }
    }

    #[test]
    fn step_envelope() {
        let env = build_envelope(&figure_bounds()).unwrap();
        assert_eq!(env.upper_at(-1.0), 0.0);
        assert_eq!(env.lower_at(1.0), 0.0);
        assert_eq!(env.upper_at(1.0), 0.3);
        assert_eq!(env.lower_at(2.5), 0.1);
        assert_eq!(env.upper_at(2.5), 0.3);
        assert_eq!(env.lower_at(4.9), 0.1);
        assert_eq!(env.upper_at(4.9), 0.6);
        assert_eq!(env.lower_at(6.0), 0.3);
        assert_eq!(env.upper_at(6.0), 0.9);
        assert_eq!(env.lower_at(8.0), 0.7);
        assert_eq!(env.upper_at(8.0), 1.0);
        assert_eq!(env.lower_at(10.0), 1.0);
        let csv = env.breakpoints_csv();
        assert_eq!(csv, "c,lower,upper\n0,0,0.3\n2.5,0.1,0.3\n5,0.3,0.6\n7.5,0.7,0.9\n10,1,1\n");
    }

    #[test]
    fn crossing_bounds_are_infeasible() {
        let tb = ThresholdBounds::new(vec![1.0, 2.0], vec![(0.5, 0.6), (0.1, 0.2)]).unwrap();
        let err = build_envelope(&tb).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBounds { lower, upper, .. } if lower == 0.5 && upper == 0.2));
    }

    #[test]
    fn monotonization_repairs_overlap() {
        let tb = ThresholdBounds::new(vec![1.0, 2.0], vec![(0.3, 0.9), (0.1, 0.5)]).unwrap();
        let env = build_envelope(&tb).unwrap();
        assert_eq!((env.lower_at(2.0), env.upper_at(1.0)), (0.3, 0.5));
    }

    #[test]
    fn consistency_checks() {
        let tb = figure_bounds();
        let env = build_envelope(&tb).unwrap();
        let mids: Vec<f64> = tb.intervals().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        assert!(is_consistent(&mids, &env));
        let mut bad = mids.clone();
        bad[1] = 0.6 + 0.05;
        assert!(!is_consistent(&bad, &env));
        assert!(!is_consistent(&mids[..2], &env));
    }

    #[test]
    fn validation() {
        assert!(ThresholdBounds::new(vec![1.0, 1.0], vec![(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(ThresholdBounds::new(vec![1.0], vec![(0.6, 0.5)]).is_err());
        assert!(ThresholdBounds::new(vec![], vec![]).is_err());
        let tb = ThresholdBounds::new(vec![1.0], vec![(0.2, 0.5)]).unwrap();
        assert!(tb.clone().with_clamps(Some(2.0), None).is_err());
        assert!(tb.with_clamps(None, Some(0.5)).is_err());
    }

    #[test]
    fn csv_input() {
        let tb = ThresholdBounds::from_csv("# fig\nc,lo,hi\n2.5,0.1,0.3\n5,0.3,0.6\n").unwrap();
        assert_eq!(tb.thresholds(), &[2.5, 5.0]);
        assert!(ThresholdBounds::from_csv("c,lo,hi\n2.5,0.1\n").is_err());
    }
}
