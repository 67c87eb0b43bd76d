//! Scenario files are the one untrusted input surface; parsing arbitrary
//! bytes must return an error, never panic.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = mvlayers::parse_scenario_str(text);
    }
});
