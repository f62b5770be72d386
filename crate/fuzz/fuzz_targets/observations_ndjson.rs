#![no_main]
use libfuzzer_sys::fuzz_target;
use mixbet_core::{mixing_interval, point_belief_bounds, refine_schedule, ObservationSet};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(obs) = ObservationSet::from_ndjson(s) {
            let _ = mixing_interval(&obs, 0.01);
            let _ = point_belief_bounds(&obs);
            let _ = refine_schedule(&obs, 8);
            let back = ObservationSet::from_ndjson(&obs.to_ndjson()).expect("written observations parse");
            assert_eq!(back, obs);
        }
    }
});
