#![no_main]

use libfuzzer_sys::fuzz_target;
use ohlab::io::{parse_trajectory, write_trajectory};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything accepted must survive a write/parse round trip unchanged.
    if let Ok(traj) = parse_trajectory(text) {
        let again = parse_trajectory(&write_trajectory(&traj)).expect("own output parses");
        assert_eq!(again.snapshots, traj.snapshots);
    }
});
