#![no_main]
use libfuzzer_sys::fuzz_target;
use mixbet_session::Session;

// Any log that replays must write itself back byte for byte.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(session) = Session::from_ndjson(s) {
            let log = session.to_ndjson();
            let again = Session::from_ndjson(&log).expect("written logs replay");
            assert_eq!(again.to_ndjson(), log);
            let _ = session.bounds();
        }
    }
});
