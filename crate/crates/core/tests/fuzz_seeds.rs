//! Replays the checked-in fuzz corpus through the parser entry points so the
//! seeds stay meaningful without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use ohlab::config::{SolveConfig, SweepConfig};
use ohlab::diagnostics::series_from_csv;
use ohlab::io::{parse_trajectory, write_trajectory, Table};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("seed-")
        })
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn trajectory_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("parse_trajectory") {
        if let Ok(traj) = parse_trajectory(&text) {
            let again = parse_trajectory(&write_trajectory(&traj)).unwrap();
            assert_eq!(again.snapshots, traj.snapshots, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 1);
    assert!(
        parse_trajectory(&seeds("parse_trajectory")[1].1).is_err(),
        "truncated seed parses"
    );
}

#[test]
fn solve_config_seeds() {
    for (name, text) in seeds("parse_solve_config") {
        let ok = SolveConfig::parse(&text).and_then(|c| c.validate()).is_ok();
        assert_eq!(ok, name != "seed-partial", "{name}");
    }
}

#[test]
fn sweep_config_seeds() {
    for (name, text) in seeds("parse_sweep_config") {
        let cfg = SweepConfig::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn csv_seeds() {
    for (name, text) in seeds("parse_diag_csv") {
        series_from_csv(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("parse_table") {
        let table = Table::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        for h in &table.header {
            assert_eq!(table.column(h).unwrap().len(), table.rows.len(), "{name}");
        }
    }
}
