#![no_main]

use libfuzzer_sys::fuzz_target;
use wairy::weyl::GradedOperator;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 16 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(op) = GradedOperator::from_json_str(s) {
            let json = op.to_json().to_string();
            let back = GradedOperator::from_json_str(&json).unwrap();
            assert_eq!(back, op);
        }
    }
});
