//! Any scenario the parser accepts must survive the canonical writer:
//! write → reparse yields an equal spec and a byte-stable document.

#![no_main]
use libfuzzer_sys::fuzz_target;

use mvlayers::{parse_scenario_str, scenario_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = parse_scenario_str(text) else {
        return;
    };
    let canonical = scenario_to_string(&spec);
    let reparsed =
        parse_scenario_str(&canonical).expect("canonical form of an accepted scenario must parse");
    assert_eq!(reparsed, spec, "round-trip changed the spec");
    assert_eq!(
        scenario_to_string(&reparsed),
        canonical,
        "canonical form is not a fixed point"
    );
});
