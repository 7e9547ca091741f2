#![no_main]

use libfuzzer_sys::fuzz_target;
use pswitch::io::parse_s_vector;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_s_vector(text) {
        assert!(v.iter().all(|x| x.is_finite()));
        let joined = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        assert_eq!(parse_s_vector(&joined).unwrap(), v);
    }
});
