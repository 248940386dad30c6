#![no_main]

use libfuzzer_sys::fuzz_target;
use wairy_cli::config::parse_kv;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 14 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_kv(s) {
            let _ = cfg.get("rho");
            let _ = cfg.get_parsed::<u32>("n");
        }
    }
});
