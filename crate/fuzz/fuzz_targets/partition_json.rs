#![no_main]

use libfuzzer_sys::fuzz_target;
use wairy::partitions::Partition;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 12 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = Partition::from_json_str(s) {
            // The lambda profile is defined on every index of a valid
            // partition and reconstructs it.
            if p.sum() <= 64 {
                let profile = p.lambda_profile();
                assert_eq!(profile.len() as u32, p.sum());
            }
        }
    }
});
