#![no_main]

use libfuzzer_sys::fuzz_target;
use wairy::scalar::CycloScalar;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(scalar) = CycloScalar::from_json_str(s) {
            // A parsed value must serialize canonically and round-trip.
            let json = scalar.to_json_string();
            let back = CycloScalar::from_json_str(&json).unwrap();
            assert_eq!(back.to_json_string(), json);
        }
    }
});
