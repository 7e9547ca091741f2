#![no_main]

use libfuzzer_sys::fuzz_target;
use pswitch::io::{parse_spec, spec_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = parse_spec(text) else { return };
    // serializing and re-parsing must give the same spec
    let again = parse_spec(&spec_to_json(&spec)).expect("emitted spec parses");
    assert_eq!(spec, again);
    let _ = spec.to_control_set();
});
