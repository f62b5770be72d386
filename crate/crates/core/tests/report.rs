use std::collections::BTreeMap;

use mixbet_core::*;

fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn column(ds: &FigureDataset, name: &str) -> Vec<f64> {
    ds.column(name).unwrap_or_else(|| panic!("missing column {name}"))
}

#[test]
fn seu_table_is_a_step_at_the_belief() {
    let ds = figure_dataset(FigureName::Fig3Seu, &BTreeMap::new()).unwrap();
    assert_eq!(ds.rows.len(), 1001);
    for row in &ds.rows {
        let (v, q, lo, hi, x) = (row[0], row[1], row[2], row[3], row[4]);
        if v < 0.3 {
            assert_eq!((lo, hi, x), (1.0, 1.0, 1.0), "v = {v}");
        } else if v > 0.3 {
            assert_eq!((lo, hi, x), (0.0, 0.0, 0.0), "v = {v}");
        } else {
            assert_eq!((lo, hi, x), (0.0, 1.0, 1.0 - q));
        }
    }
}

#[test]
fn maxmin_table_hedges_exactly_inside_beliefs() {
    let ds = figure_dataset(FigureName::Fig4Maxmin, &params(&[("a", "0.25"), ("b", "0.6")])).unwrap();
    assert_eq!(ds.parameters["a"], "0.25");
    for row in &ds.rows {
        let (v, q, lo, hi, x) = (row[0], row[1], row[2], row[3], row[4]);
        let hedge = 1.0 - q;
        let want = if v < 0.25 {
            (1.0, 1.0)
        } else if v == 0.25 {
            (hedge, 1.0)
        } else if v < 0.6 {
            (hedge, hedge)
        } else if v == 0.6 {
            (0.0, hedge)
        } else {
            (0.0, 0.0)
        };
        assert_eq!((lo, hi), want, "v = {v}");
        assert_eq!(x, 0.5 * (lo + hi), "v = {v}");
    }
}

#[test]
fn variational_curves_follow_cost_slope() {
    let ds = figure_dataset(FigureName::Fig5Variational, &BTreeMap::new()).unwrap();
    let v = column(&ds, "v");
    type Slope = Box<dyn Fn(f64) -> f64>;
    let curves: Vec<(&str, Slope)> = vec![
        ("entropy_0.1", Box::new(|v: f64| 0.1 * (v / (1.0 - v)).ln())),
        ("entropy_0.5", Box::new(|v: f64| 0.5 * (v / (1.0 - v)).ln())),
        ("entropy_1.5", Box::new(|v: f64| 1.5 * (v / (1.0 - v)).ln())),
        ("power_1", Box::new(|v: f64| 4.0 * (v - 0.5).powi(3))),
        ("power_10", Box::new(|v: f64| 40.0 * (v - 0.5).powi(3))),
        ("power_100", Box::new(|v: f64| 400.0 * (v - 0.5).powi(3))),
    ];
    for (name, cost_slope) in curves {
        let x = column(&ds, name);
        for (&v, &x) in v.iter().zip(&x) {
            let interior = (v - cost_slope(v)).clamp(0.0, 1.0);
            // At an endpoint of B the worst case sticks to that endpoint once
            // the bet leans past the interior solution, so the value is flat
            // between it and the matching corner.
            let (lo, hi) = if v < 0.1 {
                (1.0, 1.0)
            } else if v > 0.8 {
                (0.0, 0.0)
            } else if v == 0.1 {
                (interior, 1.0)
            } else if v == 0.8 {
                (0.0, interior)
            } else {
                (interior, interior)
            };
            assert!(x >= lo - 1e-8 && x <= hi + 1e-8, "{name}: v = {v}, x = {x}, optimal set [{lo}, {hi}]");
        }
    }
}

#[test]
fn second_order_curves_stay_in_the_rectangle() {
    let ds = figure_dataset(FigureName::Fig6SecondOrder, &BTreeMap::new()).unwrap();
    let v = column(&ds, "v");
    for name in ["cara_1", "cara_4", "cara_16"] {
        let x = column(&ds, name);
        for (&v, &x) in v.iter().zip(&x) {
            if v < 0.1 {
                assert_eq!(x, 1.0, "{name}: v = {v}");
            } else if v > 0.8 {
                assert_eq!(x, 0.0, "{name}: v = {v}");
            }
        }
        // No jumps: subdividing the largest grid step shrinks it proportionally.
        let (i, jump) = x.windows(2).map(|w| (w[1] - w[0]).abs()).enumerate().fold((0, 0.0), |best, (i, d)| {
            if d > best.1 {
                (i, d)
            } else {
                best
            }
        });
        let theta: f64 = name.trim_start_matches("cara_").parse().unwrap();
        let model = PreferenceModel::second_order(
            SecondOrderDistribution::uniform(0.1, 0.8).unwrap(),
            SecondOrderUtility::cara(theta).unwrap(),
        );
        let fine: Vec<f64> = (0..=1000)
            .map(|k| {
                let q = OddsQuota::saturating(1.0 - (v[i] + (v[i + 1] - v[i]) * k as f64 / 1000.0));
                best_response(&model, q, &UtilityScale::default()).unwrap().canonical(q).get()
            })
            .collect();
        let fine_jump = fine.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(fine_jump <= jump / 100.0, "{name}: step {jump} near v = {} refines to {fine_jump}", v[i]);
        // At the mean belief the hedge is optimal.
        let at_mean = v.iter().position(|v| (v - 0.45).abs() < 1e-12).unwrap();
        assert!((x[at_mean] - v[at_mean]).abs() <= 1e-9, "{name}: x = {} at the mean", x[at_mean]);
    }
}

#[test]
fn envelope_figure_is_the_step_pair() {
    let ds = figure_dataset(FigureName::Fig7Envelope, &BTreeMap::new()).unwrap();
    assert_eq!(ds.rows.len(), 1001);
    for row in &ds.rows {
        let (y, lo, hi) = (row[0], row[1], row[2]);
        let want_lo = match y {
            y if y >= 10.0 => 1.0,
            y if y >= 7.5 => 0.7,
            y if y >= 5.0 => 0.3,
            y if y >= 2.5 => 0.1,
            _ => 0.0,
        };
        let want_hi = match y {
            y if y <= 2.5 => 0.3,
            y if y <= 5.0 => 0.6,
            y if y <= 7.5 => 0.9,
            _ => 1.0,
        };
        assert_eq!((lo, hi), (want_lo, want_hi), "y = {y}");
    }
}

#[test]
fn value_panels_show_strict_hedging_only_under_ambiguity() {
    let ds = figure_dataset(FigureName::Fig1Values, &BTreeMap::new()).unwrap();
    let v = column(&ds, "v");
    let get = |name: &str| column(&ds, name);
    let (me, mc, mm) = (get("maxmin_event"), get("maxmin_complement"), get("maxmin_mix"));
    let (pe, pc, pm) = (get("prob_soph_event"), get("prob_soph_complement"), get("prob_soph_mix"));
    let (se, sc, sm) = (get("seu_event"), get("seu_complement"), get("seu_mix"));
    for i in 0..v.len() {
        assert!(pm[i] <= pe[i].max(pc[i]) + 1e-12, "v = {}", v[i]);
        assert!(sm[i] <= se[i].max(sc[i]) + 1e-12, "v = {}", v[i]);
        if v[i] > 0.2 + 1e-9 && v[i] < 0.4 - 1e-9 {
            assert!(mm[i] > me[i].max(mc[i]), "v = {}", v[i]);
        }
    }
}

#[test]
fn inference_example_recovers_grid_hull() {
    let ds = figure_dataset(FigureName::Fig2Inference, &BTreeMap::new()).unwrap();
    assert_eq!(ds.rows.len(), 11);
    let lo: f64 = ds.parameters["m_lo"].parse().unwrap();
    let hi: f64 = ds.parameters["m_hi"].parse().unwrap();
    assert!((lo - 0.2).abs() < 1e-12 && (hi - 0.4).abs() < 1e-12, "({lo}, {hi})");
    assert_eq!(column(&ds, "mixing").iter().sum::<f64>(), 3.0);
}

#[test]
fn second_order_convergence_distances_shrink() {
    let ds = convergence_study(StudyFamily::SecondOrder, &BTreeMap::new(), &report::DEFAULT_U_DELTAS).unwrap();
    let d = column(&ds, "distance");
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    assert!(d[d.len() - 1] < 0.02, "{d:?}");
    // The hull of mixing thresholds always sits inside B.
    for row in &ds.rows {
        assert!(row[1] >= 0.1 - 1e-12 && row[2] <= 0.8 + 1e-12);
    }
}

#[test]
fn flat_variational_cost_mixes_on_all_of_beliefs() {
    let ds = convergence_study(StudyFamily::Variational, &params(&[("theta", "1")]), &[1.0, 10.0, 100.0]).unwrap();
    for d in column(&ds, "distance") {
        assert!(d <= 1e-6, "{d}");
    }
}

#[test]
fn datasets_are_reproducible_and_self_describing() {
    for name in FigureName::ALL {
        if name == FigureName::Convergence {
            continue;
        }
        let a = figure_dataset(name, &BTreeMap::new()).unwrap().to_csv();
        let b = figure_dataset(name, &BTreeMap::new()).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(&format!("# name={name}")));
    }
    let err = figure_dataset(FigureName::Fig3Seu, &params(&[("q", "0.5")])).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { ref key, .. } if key == "q"));
    assert!(figure_dataset(FigureName::Fig4Maxmin, &params(&[("a", "x")])).is_err());
    assert!(convergence_study(StudyFamily::SecondOrder, &BTreeMap::new(), &[10.0, 1.0]).is_err());
}
