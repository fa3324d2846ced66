#![no_main]

use libfuzzer_sys::fuzz_target;
use ohlab::io::Table;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = Table::parse(text) {
            for name in &table.header {
                let _ = table.column(name);
            }
        }
    }
});
