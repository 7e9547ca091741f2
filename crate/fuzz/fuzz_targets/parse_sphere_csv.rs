#![no_main]

use libfuzzer_sys::fuzz_target;
use pswitch::io::{parse_sphere_csv, validate_polyline};
use pswitch::Vec2;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_sphere_csv(text) {
            let pts: Vec<Vec2> = rows.iter().map(|r| r.1).collect();
            let _ = validate_polyline(&pts);
        }
    }
});
