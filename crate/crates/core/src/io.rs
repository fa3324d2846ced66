//! Plain-text trajectory files and sweep tables.
//!
//! Trajectory layout:
//!
//! ```text
//! # ohlab trajectory v1
//! key=value            (header, one per line)
//! # t=<time>
//! x,u,P                (N rows)
//! # t=<time>
//! ...
//! ```
//!
//! Numbers are written with 17 significant digits so a write/read cycle is
//! bit exact.

use std::fmt::Write as _;

use crate::diagnostics::{standard_series, BoundId};
use crate::error::{Error, Result};
use crate::harness::SweepResult;
use crate::model::{Field, FluxKind, FluxModel, Grid1D, ParamSet};
use crate::solver::{Limiter, SolverOptions, State, Trajectory};

pub const TRAJECTORY_MAGIC: &str = "# ohlab trajectory v1";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory(traj: &Trajectory) -> String {
    let mut out = String::new();
    let p = &traj.params;
    let o = &traj.options;
    let _ = writeln!(out, "{TRAJECTORY_MAGIC}");
    for (k, v) in [
        ("eps", p.eps),
        ("beta", p.beta),
        ("delta", p.delta),
        ("gamma", p.gamma),
        ("L", traj.grid.half_width()),
    ] {
        let _ = writeln!(out, "{k}={}", num(v));
    }
    let _ = writeln!(out, "N={}", traj.grid.n_cells());
    let _ = writeln!(out, "model={:?}", traj.model.kind());
    for (k, v) in [
        ("cfl_hyp", o.cfl_hyp),
        ("cfl_visc", o.cfl_visc),
        ("cfl_disp", o.cfl_disp),
        ("t_end", o.t_end),
    ] {
        let _ = writeln!(out, "{k}={}", num(v));
    }
    let _ = writeln!(out, "snapshot_stride={}", o.snapshot_stride);
    match o.snapshot_interval {
        Some(iv) => {
            let _ = writeln!(out, "snapshot_interval={}", num(iv));
        }
        None => {
            let _ = writeln!(out, "snapshot_interval=none");
        }
    }
    let _ = writeln!(out, "limiter={:?}", o.limiter);
    let _ = writeln!(out, "max_steps={}", o.max_steps);
    let _ = writeln!(out, "steps={}", traj.steps);
    for s in &traj.snapshots {
        let _ = writeln!(out, "# t={}", num(s.t));
        for (i, (u, pv)) in s.u.values().iter().zip(s.p.values()).enumerate() {
            let _ = writeln!(out, "{},{},{}", num(traj.grid.x(i)), num(*u), num(*pv));
        }
    }
    out
}

#[derive(Default)]
struct Header {
    eps: Option<f64>,
    beta: Option<f64>,
    delta: Option<f64>,
    gamma: Option<f64>,
    half_width: Option<f64>,
    n_cells: Option<usize>,
    model: Option<FluxKind>,
    cfl_hyp: Option<f64>,
    cfl_visc: Option<f64>,
    cfl_disp: Option<f64>,
    t_end: Option<f64>,
    snapshot_stride: Option<usize>,
    snapshot_interval: Option<Option<f64>>,
    limiter: Option<Limiter>,
    max_steps: Option<usize>,
    steps: Option<usize>,
}

fn parse_f64(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|e| Error::parse(line, format!("bad number `{s}`: {e}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite number `{s}`")));
    }
    Ok(v)
}

fn parse_usize(line: usize, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|e| Error::parse(line, format!("bad integer `{s}`: {e}")))
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::parse(0, format!("missing header key `{key}`")))
}

impl Header {
    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        fn put<T>(slot: &mut Option<T>, line: usize, key: &str, v: T) -> Result<()> {
            if slot.is_some() {
                return Err(Error::parse(line, format!("duplicate header key `{key}`")));
            }
            *slot = Some(v);
            Ok(())
        }
        match key {
            "eps" => put(&mut self.eps, line, key, parse_f64(line, value)?),
            "beta" => put(&mut self.beta, line, key, parse_f64(line, value)?),
            "delta" => put(&mut self.delta, line, key, parse_f64(line, value)?),
            "gamma" => put(&mut self.gamma, line, key, parse_f64(line, value)?),
            "L" => put(&mut self.half_width, line, key, parse_f64(line, value)?),
            "N" => put(&mut self.n_cells, line, key, parse_usize(line, value)?),
            "model" => {
                let kind = match value {
                    "Quadratic" => FluxKind::Quadratic,
                    "Cubic" => FluxKind::Cubic,
                    other => {
                        return Err(Error::parse(line, format!("unsupported model `{other}`")))
                    }
                };
                put(&mut self.model, line, key, kind)
            }
            "cfl_hyp" => put(&mut self.cfl_hyp, line, key, parse_f64(line, value)?),
            "cfl_visc" => put(&mut self.cfl_visc, line, key, parse_f64(line, value)?),
            "cfl_disp" => put(&mut self.cfl_disp, line, key, parse_f64(line, value)?),
            "t_end" => put(&mut self.t_end, line, key, parse_f64(line, value)?),
            "snapshot_stride" => put(
                &mut self.snapshot_stride,
                line,
                key,
                parse_usize(line, value)?,
            ),
            "snapshot_interval" => {
                let v = if value == "none" {
                    None
                } else {
                    Some(parse_f64(line, value)?)
                };
                put(&mut self.snapshot_interval, line, key, v)
            }
            "limiter" => {
                let l = match value {
                    "None" => Limiter::None,
                    "LocalLaxFriedrichs" => Limiter::LocalLaxFriedrichs,
                    "GlobalLaxFriedrichs" => Limiter::GlobalLaxFriedrichs,
                    other => return Err(Error::parse(line, format!("unknown limiter `{other}`"))),
                };
                put(&mut self.limiter, line, key, l)
            }
            "max_steps" => put(&mut self.max_steps, line, key, parse_usize(line, value)?),
            "steps" => put(&mut self.steps, line, key, parse_usize(line, value)?),
            other => Err(Error::parse(line, format!("unknown header key `{other}`"))),
        }
    }
}

/// Reads a file produced by [`write_trajectory`]. Never panics; every
/// malformed input is reported as [`Error::Parse`] (or a validation error).
pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    match lines.next() {
        Some((_, l)) if l.trim_end() == TRAJECTORY_MAGIC => {}
        _ => return Err(Error::parse(1, format!("expected `{TRAJECTORY_MAGIC}`"))),
    }

    let mut h = Header::default();
    while let Some(&(no, line)) = lines.peek() {
        if line.starts_with("# t=") {
            break;
        }
        lines.next();
        if line.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(no, "expected `key=value`"));
        };
        h.set(no, k.trim(), v.trim())?;
    }

    let params = ParamSet {
        eps: required(h.eps, "eps")?,
        beta: required(h.beta, "beta")?,
        delta: required(h.delta, "delta")?,
        gamma: required(h.gamma, "gamma")?,
    };
    params.validate()?;
    let grid = Grid1D::new(required(h.half_width, "L")?, required(h.n_cells, "N")?)?;
    let model = FluxModel::from_kind(required(h.model, "model")?)?;
    let options = SolverOptions {
        cfl_hyp: required(h.cfl_hyp, "cfl_hyp")?,
        cfl_visc: required(h.cfl_visc, "cfl_visc")?,
        cfl_disp: required(h.cfl_disp, "cfl_disp")?,
        t_end: required(h.t_end, "t_end")?,
        snapshot_stride: required(h.snapshot_stride, "snapshot_stride")?,
        snapshot_interval: required(h.snapshot_interval, "snapshot_interval")?,
        limiter: required(h.limiter, "limiter")?,
        max_steps: required(h.max_steps, "max_steps")?,
    };
    options.validate()?;
    let steps = required(h.steps, "steps")?;

    let n = grid.n_cells();
    let x_tol = 1e-12 * (1.0 + grid.half_width());
    let mut snapshots: Vec<State> = Vec::new();
    while let Some((no, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let Some(ts) = line.strip_prefix("# t=") else {
            return Err(Error::parse(no, "expected `# t=<time>`"));
        };
        let t = parse_f64(no, ts)?;
        if snapshots.last().is_some_and(|s| !(t > s.t)) {
            return Err(Error::parse(
                no,
                "snapshot times must be strictly increasing",
            ));
        }
        // Grow with the input rather than trusting N for the allocation size.
        let mut u = Vec::new();
        let mut p = Vec::new();
        for i in 0..n {
            let Some((row_no, row)) = lines.next() else {
                return Err(Error::parse(
                    no,
                    format!("snapshot truncated after {i} of {n} rows"),
                ));
            };
            let mut cols = row.split(',');
            let (Some(x), Some(uv), Some(pv), None) =
                (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(Error::parse(row_no, "expected three columns `x,u,P`"));
            };
            let x = parse_f64(row_no, x)?;
            if (x - grid.x(i)).abs() > x_tol {
                return Err(Error::parse(
                    row_no,
                    format!("node {i} at x={x}, grid expects {}", grid.x(i)),
                ));
            }
            u.push(parse_f64(row_no, uv)?);
            p.push(parse_f64(row_no, pv)?);
        }
        snapshots.push(State {
            u: Field::new(u, t)?,
            p: Field::new(p, t)?,
            t,
        });
    }
    if snapshots.is_empty() {
        return Err(Error::parse(0, "no snapshots"));
    }

    let mut traj = Trajectory {
        snapshots,
        diagnostics: Vec::new(),
        params,
        model,
        options,
        grid,
        steps,
    };
    traj.diagnostics = standard_series(&traj);
    Ok(traj)
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), num)
}

fn norm_label(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

/// One row per level: parameters, distances, entropy floor, bound verdicts
/// (`pass`, `fail` or `na`) and the cell status.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("k,eps,beta,delta,gamma");
    for p in &result.norms {
        let _ = write!(out, ",d_L{}", norm_label(*p));
    }
    out.push_str(",entropy_floor");
    for b in BoundId::ALL {
        let _ = write!(out, ",{}", b.name());
    }
    out.push_str(",status\n");
    for c in &result.cells {
        let p = &c.params;
        let _ = write!(
            out,
            "{},{},{},{},{}",
            c.k,
            num(p.eps),
            num(p.beta),
            num(p.delta),
            num(p.gamma)
        );
        let metrics = c.outcome.as_ref().ok();
        for &q in &result.norms {
            let _ = write!(out, ",{}", opt_num(metrics.and_then(|m| m.distance(q))));
        }
        let _ = write!(out, ",{}", opt_num(metrics.map(|m| m.entropy_floor)));
        for b in BoundId::ALL {
            let verdict = metrics
                .and_then(|m| m.bounds.iter().find(|r| r.bound == b))
                .map_or("na", |r| if r.pass { "pass" } else { "fail" });
            let _ = write!(out, ",{verdict}");
        }
        let status = match &c.outcome {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("failed: {}", e.replace([',', '\n', '\r'], ";")),
        };
        let _ = writeln!(out, ",{status}");
    }
    out
}

/// Rate fits and bound-constant slopes as a JSON document.
pub fn rates_json(result: &SweepResult) -> serde_json::Value {
    let mut rates = serde_json::Map::new();
    for (p, fit) in &result.rates {
        let v = match fit {
            Ok(f) => serde_json::json!({
                "slope": f.slope,
                "intercept": f.intercept,
                "r_squared": f.r_squared,
            }),
            Err(e) => serde_json::json!({ "error": e }),
        };
        rates.insert(format!("L{}", norm_label(*p)), v);
    }
    let mut slopes = serde_json::Map::new();
    for (b, s) in &result.bound_slopes {
        slopes.insert(b.name().to_string(), serde_json::json!(s));
    }
    serde_json::json!({ "rates": rates, "bound_log_slopes": slopes })
}

/// A comma-separated table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let Some((_, head)) = lines.next() else {
            return Err(Error::parse(1, "empty table"));
        };
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if row.len() != header.len() {
                return Err(Error::parse(
                    i + 1,
                    format!("{} columns, header has {}", row.len(), header.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}
