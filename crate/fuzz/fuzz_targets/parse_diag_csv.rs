#![no_main]

use libfuzzer_sys::fuzz_target;
use ohlab::diagnostics::series_from_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = series_from_csv(text);
    }
});
