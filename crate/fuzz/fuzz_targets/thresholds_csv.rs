#![no_main]
use libfuzzer_sys::fuzz_target;
use mixbet_core::{build_envelope, is_consistent, ThresholdBounds};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(tb) = ThresholdBounds::from_csv(s) {
            if let Ok(env) = build_envelope(&tb) {
                // The lower envelope itself is always a consistent CDF.
                let lower: Vec<f64> = env.thresholds().iter().map(|&c| env.lower_at(c)).collect();
                assert!(is_consistent(&lower, &env));
                let _ = env.breakpoints_csv();
            }
        }
    }
});
