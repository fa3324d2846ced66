use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ohlab::config::{config_hash, SolveConfig, SweepConfig};
use ohlab::diagnostics::{
    bound_monitor, energy_balance_residual, lp_distance, series_from_csv, series_to_csv,
    standard_series, BoundId, BoundReport, DiagSeries, Window,
};
use ohlab::io::{parse_trajectory, rates_json, sweep_csv, write_trajectory, Table};
use ohlab::{run_sweep, solve as integrate, Error, Trajectory};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_BLOW_UP: u8 = 2;
pub const EXIT_SWEEP_FAILED: u8 = 3;

const MANIFEST: &str = "manifest.json";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BlowUp { .. } | Error::IncompleteRun { .. } | Error::MaximumPrinciple { .. } => {
                EXIT_BLOW_UP
            }
            Error::SweepFailed => EXIT_SWEEP_FAILED,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Clone, Copy)]
pub struct Log(pub bool);

impl Log {
    fn say(&self, msg: impl AsRef<str>) {
        if self.0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn pretty(value: &serde_json::Value) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::config(e.to_string()))
}

/// Creates `<out>/<hash>`, refusing to reuse an existing one unless `force`.
fn run_dir(out: &Path, hash: &str, force: bool) -> Result<PathBuf, Failure> {
    let dir = out.join(hash);
    if dir.exists() {
        if !force {
            return Err(Failure::config(format!(
                "run directory {} already exists; pass --force to overwrite",
                dir.display()
            )));
        }
        fs::remove_dir_all(&dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
    }
    fs::create_dir_all(&dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn manifest(kind: &str, hash: &str) -> serde_json::Value {
    serde_json::json!({
        "kind": kind,
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Standard series plus the energy-balance residual where it is defined.
fn run_diagnostics(traj: &Trajectory) -> Vec<DiagSeries> {
    let mut series = standard_series(traj);
    if traj.snapshots.len() > 1 {
        if let Ok(r) = energy_balance_residual(traj) {
            series.push(r);
        }
    }
    series
}

fn bound_reports(traj: &Trajectory) -> Result<Vec<BoundReport>, Failure> {
    BoundId::ALL
        .into_iter()
        .filter(|b| b.applies_to(&traj.params))
        .map(|b| bound_monitor(traj, b).map_err(Failure::from))
        .collect()
}

pub fn solve(config: &Path, out: &Path, force: bool, log: Log) -> Outcome {
    let text = read(config)?;
    let setup = SolveConfig::parse(&text)?.validate()?;
    let hash = config_hash(&text)?;
    let u0 = setup.profile.realize(&setup.grid)?.field;
    let dir = run_dir(out, &hash, force)?;
    write(&dir.join("config.json"), &text)?;
    write(&dir.join(MANIFEST), pretty(&manifest("solve", &hash))?)?;
    log.say(format!(
        "solving on N = {}, t_end = {} ({})",
        setup.grid.n_cells(),
        setup.options.t_end,
        if setup.params.is_relaxed() {
            "relaxed P"
        } else {
            "static P"
        }
    ));

    let traj = match integrate(
        &u0,
        &setup.params,
        &setup.model,
        &setup.grid,
        &setup.options,
    ) {
        Ok(t) => t,
        Err(Error::IncompleteRun { partial }) => {
            write(&dir.join("trajectory.txt"), write_trajectory(&partial))?;
            return Err(Error::IncompleteRun { partial }.into());
        }
        Err(e) => return Err(e.into()),
    };
    log.say(format!(
        "{} steps, {} snapshots",
        traj.steps,
        traj.snapshots.len()
    ));
    write(&dir.join("trajectory.txt"), write_trajectory(&traj))?;
    write(
        &dir.join("diagnostics.csv"),
        series_to_csv(&run_diagnostics(&traj)),
    )?;
    let bounds =
        serde_json::to_value(bound_reports(&traj)?).map_err(|e| Failure::config(e.to_string()))?;
    write(&dir.join("bounds.json"), pretty(&bounds)?)?;
    println!("{}", dir.display());
    Ok(())
}

pub fn sweep(config: &Path, out: &Path, jobs: usize, force: bool, log: Log) -> Outcome {
    if jobs == 0 {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    let text = read(config)?;
    let mut plan = SweepConfig::parse(&text)?.validate()?;
    plan.keep_trajectories = true;
    let hash = config_hash(&text)?;
    let dir = run_dir(out, &hash, force)?;
    write(&dir.join("config.json"), &text)?;
    write(&dir.join(MANIFEST), pretty(&manifest("sweep", &hash))?)?;
    log.say(format!(
        "sweeping {} levels on {jobs} thread(s)",
        plan.regime.k_max + 1
    ));

    let result = run_sweep(&plan, jobs)?;
    write(&dir.join("sweep.csv"), sweep_csv(&result))?;
    write(&dir.join("rates.json"), pretty(&rates_json(&result))?)?;
    let mut reference = String::from("x,u\n");
    for (i, u) in result.reference.values().iter().enumerate() {
        let _ = writeln!(reference, "{:.16e},{:.16e}", plan.grid.x(i), u);
    }
    write(&dir.join("reference.csv"), reference)?;
    let runs = dir.join("runs");
    fs::create_dir_all(&runs).map_err(|e| Failure::config(e.to_string()))?;
    for cell in &result.cells {
        match (&cell.trajectory, &cell.outcome) {
            (Some(traj), _) => write(
                &runs.join(format!("k{}.txt", cell.k)),
                write_trajectory(traj),
            )?,
            (None, Err(e)) => log.say(format!("cell k = {} failed: {e}", cell.k)),
            (None, Ok(_)) => {}
        }
    }
    println!("{}", dir.display());
    Ok(())
}

fn parse_norm(s: &str) -> Result<f64, Failure> {
    let p = match s {
        "inf" | "Inf" | "infinity" => f64::INFINITY,
        _ => s
            .parse::<f64>()
            .map_err(|_| Failure::config(format!("--norm: `{s}` is not a number or `inf`")))?,
    };
    if p.is_nan() || p < 1.0 {
        return Err(Failure::config(format!("--norm must be >= 1, got {s}")));
    }
    Ok(p)
}

pub fn compare(first: &Path, second: &Path, norm: &str, window: Option<&str>) -> Outcome {
    let p = parse_norm(norm)?;
    let a = parse_trajectory(&read(first)?)?;
    let b = parse_trajectory(&read(second)?)?;
    if a.grid != b.grid {
        return Err(Error::GridMismatch {
            left: a.grid.n_cells(),
            right: b.grid.n_cells(),
        }
        .into());
    }
    let window = match window {
        None => Window::full(&a.grid),
        Some(w) => {
            let parts: Vec<&str> = w.split(',').collect();
            let parsed: Vec<f64> = parts.iter().filter_map(|s| s.trim().parse().ok()).collect();
            match parsed[..] {
                [lo, hi] if parts.len() == 2 && lo < hi => Window { lo, hi },
                _ => {
                    return Err(Failure::config(format!(
                        "--window: expected `lo,hi`, got `{w}`"
                    )))
                }
            }
        }
    };
    let d = lp_distance(&a.last().u, &b.last().u, p, window, &a.grid)?;
    println!("{d:.16e}");
    Ok(())
}

pub fn report(dir: &Path, log: Log) -> Outcome {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(Failure::config(format!(
            "{} is not a run directory (no {MANIFEST})",
            dir.display()
        )));
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(&manifest_path)?)
        .map_err(|e| Failure::config(format!("{}: {e}", manifest_path.display())))?;
    let out = dir.join("report");
    fs::create_dir_all(&out).map_err(|e| Failure::config(e.to_string()))?;
    match manifest.get("kind").and_then(|k| k.as_str()) {
        Some("solve") => report_solve(dir, &out, log),
        Some("sweep") => report_sweep(dir, &out, log),
        other => Err(Failure::config(format!("unrecognized run kind {other:?}"))),
    }
}

fn report_solve(dir: &Path, out: &Path, log: Log) -> Outcome {
    let traj = parse_trajectory(&read(&dir.join("trajectory.txt"))?)?;
    let stored = series_from_csv(&read(&dir.join("diagnostics.csv"))?)?;
    let recomputed = run_diagnostics(&traj);
    let reproduced = stored.len() == recomputed.len()
        && stored
            .iter()
            .zip(&recomputed)
            .all(|(a, b)| a.name == b.name && a.times == b.times && a.values == b.values);

    let mut snaps = String::from("snapshot,t,x,u,P\n");
    for (k, s) in traj.snapshots.iter().enumerate() {
        for (i, (u, p)) in s.u.values().iter().zip(s.p.values()).enumerate() {
            let _ = writeln!(
                snaps,
                "{k},{:.16e},{:.16e},{u:.16e},{p:.16e}",
                s.t,
                traj.grid.x(i)
            );
        }
    }
    write(&out.join("snapshots.csv"), snaps)?;
    let mut energy = String::from("time,energy\n");
    if let Some(e) = stored.iter().find(|s| s.name == "energy") {
        for (t, v) in e.times.iter().zip(&e.values) {
            let _ = writeln!(energy, "{t:.16e},{v:.16e}");
        }
    }
    write(&out.join("energy.csv"), energy)?;

    let bounds = bound_reports(&traj)?;
    let mut summary = String::new();
    let p = traj.params;
    let _ = writeln!(
        summary,
        "solve run: eps={:e} beta={:e} delta={:e} gamma={:e} N={} t_end={}",
        p.eps,
        p.beta,
        p.delta,
        p.gamma,
        traj.grid.n_cells(),
        traj.final_time()
    );
    let _ = writeln!(
        summary,
        "steps={} snapshots={}",
        traj.steps,
        traj.snapshots.len()
    );
    let _ = writeln!(
        summary,
        "diagnostics reproduced bit-exactly: {}",
        if reproduced { "yes" } else { "no" }
    );
    let _ = writeln!(summary);
    let _ = writeln!(
        summary,
        "{:<20} {:>14} {:>14} {:>10} {:>6}",
        "bound", "measured", "constant", "cap", "pass"
    );
    for b in &bounds {
        let _ = writeln!(
            summary,
            "{:<20} {:>14.6e} {:>14.6e} {:>10.4e} {:>6}",
            b.bound.name(),
            b.measured,
            b.constant,
            b.cap,
            if b.pass { "pass" } else { "FAIL" }
        );
    }
    write(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    log.say(format!("report written to {}", out.display()));
    if !reproduced {
        return Err(Failure::config(
            "diagnostics.csv does not match diagnostics recomputed from trajectory.txt",
        ));
    }
    Ok(())
}

fn report_sweep(dir: &Path, out: &Path, log: Log) -> Outcome {
    let table = Table::parse(&read(&dir.join("sweep.csv"))?)?;
    let rates: serde_json::Value = serde_json::from_str(&read(&dir.join("rates.json"))?)
        .map_err(|e| Failure::config(format!("rates.json: {e}")))?;
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| Failure::config(format!("sweep.csv has no `{name}` column")))
    };
    let ks = col("k")?;
    let eps = col("eps")?;
    let status = col("status")?;
    let floors = col("entropy_floor")?;
    let distance_names: Vec<&String> = table
        .header
        .iter()
        .filter(|h| h.starts_with("d_L"))
        .collect();
    if distance_names.is_empty() {
        return Err(Failure::config("sweep.csv has no distance columns"));
    }
    let distances: Vec<Vec<&str>> = distance_names
        .iter()
        .map(|n| col(n))
        .collect::<Result<_, _>>()?;

    let mut csv = String::from("k,eps");
    for n in &distance_names {
        let _ = write!(csv, ",{n}");
    }
    csv.push('\n');
    for (row, k) in ks.iter().enumerate() {
        let _ = write!(csv, "{k},{}", eps[row]);
        for d in &distances {
            let _ = write!(csv, ",{}", d[row]);
        }
        csv.push('\n');
    }
    write(&out.join("distances.csv"), csv)?;

    let bound_names: Vec<&str> = BoundId::ALL
        .iter()
        .map(|b| b.name())
        .filter(|n| table.header.iter().any(|h| h == n))
        .collect();
    let mut summary = String::new();
    let _ = write!(summary, "{:>3} {:>12}", "k", "eps");
    for n in &distance_names {
        let _ = write!(summary, " {:>12}", n);
    }
    let _ = write!(summary, " {:>14}", "entropy_floor");
    for n in &bound_names {
        let _ = write!(summary, " {n}");
    }
    let _ = writeln!(summary, "  status");
    for (row, k) in ks.iter().enumerate() {
        let short = |s: &str| {
            s.parse::<f64>()
                .map_or(s.to_string(), |v| format!("{v:.4e}"))
        };
        let _ = write!(summary, "{k:>3} {:>12}", short(eps[row]));
        for d in &distances {
            let _ = write!(summary, " {:>12}", short(d[row]));
        }
        let _ = write!(summary, " {:>14}", short(floors[row]));
        for n in &bound_names {
            let v = col(n)?[row];
            let _ = write!(summary, " {v:>width$}", width = n.len());
        }
        let _ = writeln!(summary, "  {}", status[row]);
    }
    let _ = writeln!(summary);
    if let Some(map) = rates.get("rates").and_then(|r| r.as_object()) {
        for (norm, fit) in map {
            match (fit.get("slope").and_then(|s| s.as_f64()), fit.get("error")) {
                (Some(slope), _) => {
                    let r2 = fit
                        .get("r_squared")
                        .and_then(|v| v.as_f64())
                        .unwrap_or(f64::NAN);
                    let _ = writeln!(summary, "slope {norm}: {slope:.4} (R^2 = {r2:.4})");
                }
                (None, Some(e)) => {
                    let _ = writeln!(
                        summary,
                        "slope {norm}: undefined ({})",
                        e.as_str().unwrap_or("?")
                    );
                }
                _ => {}
            }
        }
    }
    write(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    log.say(format!("report written to {}", out.display()));
    Ok(())
}
