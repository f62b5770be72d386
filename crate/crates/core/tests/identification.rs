mod common;

use common::*;
use mixbet_core::identify::{DEFAULT_MIXING_EPS, NOISELESS_MIXING_EPS};
use mixbet_core::*;
use proptest::prelude::*;
use rand::Rng;

fn model_of_class(class: usize, r: &mut rand_chacha::ChaCha8Rng) -> PreferenceModel {
    match class {
        0 => random_maxmin(r),
        1 => random_variational(r),
        _ => random_second_order(r),
    }
}

#[test]
fn mixing_interval_lies_inside_beliefs() {
    let mut r = rng(21);
    let grid = threshold_grid(1e-3);
    for class in 0..3 {
        for i in 0..30 {
            let m = model_of_class(class, &mut r);
            let sc = scale(random_u_delta(&mut r));
            let b = m.belief_interval();
            let res = mixing_interval(&simulate(&m, &grid, &sc), NOISELESS_MIXING_EPS).unwrap();
            if let Some(mi) = res.interval {
                assert!(mi.is_within(&b, 1e-9), "{} #{i}: M = {mi:?} not inside B = {b:?}", m.name());
            }
        }
    }
}

#[test]
fn refined_maxmin_interval_recovers_beliefs() {
    let mut r = rng(22);
    for i in 0..50 {
        let m = random_maxmin(&mut r);
        let sc = scale(random_u_delta(&mut r));
        let b = m.belief_interval();
        let mi = refined_mixing_interval(&m, &sc).unwrap().expect("maxmin mixes on its interval");
        assert!(mi.hausdorff(&b) <= 1e-6 + 1e-12, "#{i}: M = {mi:?}, B = {b:?}");
    }
}

#[test]
fn seu_is_never_ambiguous() {
    let mut r = rng(23);
    for step in [0.1, 0.05, 0.01, 1e-3] {
        let grid = threshold_grid(step);
        for _ in 0..50 {
            let p = if r.random_bool(0.3) { (r.random_range(0..=20) as f64) * 0.05 } else { r.random() };
            let m = PreferenceModel::seu(p).unwrap();
            let obs = simulate(&m, &grid, &UtilityScale::default());
            for eps in [NOISELESS_MIXING_EPS, DEFAULT_MIXING_EPS] {
                let res = mixing_interval(&obs, eps).unwrap();
                assert!(!res.ambiguous, "p = {p}, step = {step}: {:?}", res.mixing_points);
            }
        }
    }
}

#[test]
fn wide_maxmin_is_detected_as_ambiguous() {
    let mut r = rng(24);
    let grid = threshold_grid(1e-3);
    for _ in 0..100 {
        let m = random_maxmin(&mut r);
        let res = mixing_interval(&simulate(&m, &grid, &UtilityScale::default()), DEFAULT_MIXING_EPS).unwrap();
        assert!(res.ambiguous, "{:?}", m.belief_interval());
    }
}

#[test]
fn second_order_mixes_at_mean_belief() {
    let mut r = rng(25);
    for _ in 0..50 {
        let m = random_second_order(&mut r);
        let PreferenceModel::SecondOrder { distribution, .. } = &m else { unreachable!() };
        let mean = distribution.mean();
        let sc = scale(random_u_delta(&mut r));
        let q = OddsQuota::saturating(1.0 - mean);
        let x = best_response(&m, q, &sc).unwrap().canonical(q).get();
        assert!((x - mean).abs() <= 1e-9, "hedge {mean} vs response {x}");

        let mut qs = threshold_grid(0.01);
        qs.push(q);
        qs.sort_by(|a, b| a.get().total_cmp(&b.get()));
        qs.dedup();
        let mi = mixing_interval(&simulate(&m, &qs, &sc), NOISELESS_MIXING_EPS).unwrap().interval.unwrap();
        assert!(mi.contains(mean), "{mi:?} misses {mean}");
    }
}

#[test]
fn corner_choices_bracket_seu_belief() {
    let mut r = rng(26);
    for _ in 0..100 {
        let p: f64 = r.random_range(0.01..0.99);
        let obs = simulate(&PreferenceModel::seu(p).unwrap(), &threshold_grid(0.01), &UtilityScale::default());
        let (lo, hi) = point_belief_bounds(&obs).unwrap();
        assert!(lo.get() <= p && p <= hi.get());
        assert!(hi.get() - lo.get() <= 0.01 + 1e-12);
    }
    // Betting on the event at a higher threshold than on the complement.
    let bad = ObservationSet::new(vec![
        Observation::new(0.3, 1.0, ChoiceMode::Continuous).unwrap(),
        Observation::new(0.6, 0.0, ChoiceMode::Continuous).unwrap(),
    ])
    .unwrap();
    assert!(matches!(point_belief_bounds(&bad), Err(Error::InconsistentObservations { .. })));
}

#[test]
fn cohort_summary_averages_ambiguous_subjects() {
    let grid = threshold_grid(0.01);
    let sc = UtilityScale::default();
    let results: Vec<MixingIntervalResult> = [(0.2, 0.4), (0.3, 0.3), (0.5, 0.7)]
        .iter()
        .map(|&(a, b)| {
            let m = PreferenceModel::maxmin(a, b).unwrap();
            mixing_interval(&simulate(&m, &grid, &sc), DEFAULT_MIXING_EPS).unwrap()
        })
        .collect();
    let table = cohort_summary(&results, &["rain", "rain", "election"]).unwrap();
    let rain = table.row("rain").unwrap();
    assert_eq!(rain.subjects, 2);
    assert_eq!(rain.ambiguity_ratio, 0.5);
    let election = table.row("election").unwrap();
    assert_eq!(election.ambiguity_ratio, 1.0);
    assert!((election.mean_midpoint.unwrap() - 0.6).abs() < 1e-9);
    assert!(cohort_summary(&results, &["rain"]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Adding probes only adds mixing points, so `M` never shrinks, and
    /// the schedule never repeats an observed quota.
    #[test]
    fn refinement_is_monotone(seed in any::<u64>(), class in 0usize..3, coarse in 3usize..25) {
        let mut r = rng(seed);
        let m = model_of_class(class, &mut r);
        let sc = scale(random_u_delta(&mut r));
        let mut obs = simulate(&m, &threshold_grid(1.0 / coarse as f64), &sc);
        let opts = RefineOptions { min_gap: 1e-4, eps: NOISELESS_MIXING_EPS };
        let mut prev = mixing_interval(&obs, opts.eps).unwrap().interval;
        for _ in 0..15 {
            let probes = refine_schedule_with(&obs, 3, &opts);
            prop_assert!(probes.len() <= 3);
            for q in probes {
                prop_assert!(!obs.contains_quota(q));
                let x = best_response(&m, q, &sc).unwrap().canonical(q);
                obs.push(Observation { q, x, mode: ChoiceMode::Continuous }).unwrap();
            }
            let next = mixing_interval(&obs, opts.eps).unwrap().interval;
            if let Some(p) = prev {
                let n = next.expect("mixing points are never lost");
                prop_assert!(p.is_within(&n, 0.0), "{p:?} not inside {n:?}");
            }
            prev = next;
        }
    }
}
