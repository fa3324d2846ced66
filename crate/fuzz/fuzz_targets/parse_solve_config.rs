#![no_main]

use libfuzzer_sys::fuzz_target;
use ohlab::config::SolveConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = SolveConfig::parse(text) {
        if let Ok(setup) = cfg.validate() {
            // Realizing huge grids only measures allocation speed.
            if setup.grid.n_cells() <= 4096 {
                let _ = setup.profile.realize(&setup.grid);
            }
        }
    }
});
