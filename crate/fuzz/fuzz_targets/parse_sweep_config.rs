#![no_main]

use libfuzzer_sys::fuzz_target;
use ohlab::config::SweepConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = SweepConfig::parse(text) {
            let _ = cfg.validate();
        }
    }
});
