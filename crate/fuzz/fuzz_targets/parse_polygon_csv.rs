#![no_main]

use libfuzzer_sys::fuzz_target;
use pswitch::applications::{polygon_to_system, SymmetricPolygon};
use pswitch::io::parse_polygon_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(pts) = parse_polygon_csv(text) else { return };
    assert!(pts.iter().all(|p| p.is_finite()));
    if let Ok(poly) = SymmetricPolygon::new(pts) {
        let _ = polygon_to_system(&poly);
    }
});
