#![no_main]
use libfuzzer_sys::fuzz_target;
use mixbet_core::PreferenceModel;

// Accepted models serialize back to JSON that parses to the same model.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(model) = PreferenceModel::from_json(s) {
            let json = model.to_json().expect("parsed models serialize");
            assert_eq!(PreferenceModel::from_json(&json).expect("round trip").to_json().unwrap(), json);
        }
    }
});
