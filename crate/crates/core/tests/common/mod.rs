#![allow(dead_code)]

use mixbet_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_interval(rng: &mut ChaCha8Rng, lo: f64, hi: f64, min_width: f64) -> BeliefInterval {
    let a = rng.random_range(lo..hi - min_width);
    let b = rng.random_range(a + min_width..hi);
    BeliefInterval::new(a, b).unwrap()
}

pub fn random_maxmin(rng: &mut ChaCha8Rng) -> PreferenceModel {
    let b = random_interval(rng, 0.02, 0.98, 0.01);
    PreferenceModel::maxmin(b.lower(), b.upper()).unwrap()
}

/// Entropy costs (theta in the figure range, reference inside B) or power
/// costs (theta from 1 to 100, center inside B, exponent 4).
pub fn random_variational(rng: &mut ChaCha8Rng) -> PreferenceModel {
    let b = random_interval(rng, 0.02, 0.98, 0.05);
    let inside = |rng: &mut ChaCha8Rng| rng.random_range(b.lower() + 0.01..b.upper() - 0.01);
    let cost = if rng.random_bool(0.5) {
        let theta = rng.random_range(0.1..1.5);
        CostFunction::multiplier_entropy(b, theta, inside(rng)).unwrap()
    } else {
        let theta = 10f64.powf(rng.random_range(0.0..2.0));
        CostFunction::power(b, theta, inside(rng), 4.0).unwrap()
    };
    PreferenceModel::variational(cost)
}

pub fn random_second_order(rng: &mut ChaCha8Rng) -> PreferenceModel {
    let b = random_interval(rng, 0.02, 0.98, 0.05);
    let theta = rng.random_range(1.0..16.0);
    PreferenceModel::second_order(
        SecondOrderDistribution::uniform(b.lower(), b.upper()).unwrap(),
        SecondOrderUtility::cara(theta).unwrap(),
    )
}

pub fn random_u_delta(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.5..50.0)
}

pub fn scale(u_delta: f64) -> UtilityScale {
    UtilityScale::from_delta(0.0, u_delta).unwrap()
}

pub fn oq(q: f64) -> OddsQuota {
    OddsQuota::new(q).unwrap()
}

/// Odds quotas whose thresholds `1 - q` are `0, step, ..., 1`.
pub fn threshold_grid(step: f64) -> Vec<OddsQuota> {
    let n = (1.0 / step).round() as usize;
    (0..=n).rev().map(|i| OddsQuota::saturating(1.0 - i as f64 / n as f64)).collect()
}

/// Canonical noiseless responses, one continuous record per quota.
pub fn simulate(model: &PreferenceModel, qs: &[OddsQuota], scale: &UtilityScale) -> ObservationSet {
    let mut obs = ObservationSet::default();
    for &q in qs {
        let x = best_response(model, q, scale).unwrap().canonical(q);
        obs.push(Observation { q, x, mode: ChoiceMode::Continuous }).unwrap();
    }
    obs
}
