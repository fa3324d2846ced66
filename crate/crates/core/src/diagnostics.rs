//! Run monitors: conserved means, the weighted energy balance, norm bounds,
//! the weak entropy inequality and windowed `L^p` distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EntropyPair, Field, Grid1D};
use crate::nonlocal::Spectral;
use crate::solver::Trajectory;

/// A named scalar time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Bound this series monitors, if any.
    #[serde(default)]
    pub bound: Option<String>,
}

impl DiagSeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            times: Vec::new(),
            values: Vec::new(),
            bound: None,
        }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// `sum_i v_i dx`, the periodic trapezoid integral.
pub fn integral(values: &[f64], grid: &Grid1D) -> f64 {
    values.iter().sum::<f64>() * grid.dx()
}

pub fn mean_u(u: &Field, grid: &Grid1D) -> f64 {
    integral(u.values(), grid)
}

pub fn mean_p(p: &Field, grid: &Grid1D) -> f64 {
    integral(p.values(), grid)
}

fn l2_squared(values: &[f64], grid: &Grid1D) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() * grid.dx()
}

fn lp_norm(values: &[f64], p: f64, grid: &Grid1D) -> f64 {
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * grid.dx()).powf(1.0 / p)
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `||u||^2 + delta gamma ||P||^2`.
pub fn weighted_energy(u: &Field, p: &Field, delta: f64, gamma: f64, grid: &Grid1D) -> f64 {
    l2_squared(u.values(), grid) + delta * gamma * l2_squared(p.values(), grid)
}

/// Series attached to every trajectory: `mean_u`, `mean_p`, `energy`, `u_linf`.
pub fn standard_series(traj: &Trajectory) -> Vec<DiagSeries> {
    let g = &traj.grid;
    let (delta, gamma) = (traj.params.delta, traj.params.gamma);
    let mut mu = DiagSeries::new("mean_u");
    let mut mp = DiagSeries::new("mean_p");
    let mut energy = DiagSeries::new("energy");
    let mut linf = DiagSeries::new("u_linf");
    for s in &traj.snapshots {
        mu.push(s.t, mean_u(&s.u, g));
        mp.push(s.t, mean_p(&s.p, g));
        energy.push(s.t, weighted_energy(&s.u, &s.p, delta, gamma, g));
        linf.push(s.t, s.u.max_abs());
    }
    energy.bound = Some(BoundId::EnergyL2.name().to_string());
    linf.bound = Some(BoundId::LinfU.name().to_string());
    vec![mu, mp, energy, linf]
}

/// Per-interval residual of the weighted energy identity:
/// `r_n = (E_{n+1} - E_n) / (t_{n+1} - t_n) + 2 eps ||D1 u_n||^2`.
pub fn energy_balance_residual(traj: &Trajectory) -> Result<DiagSeries> {
    let params = traj.params;
    if params.beta != 0.0 {
        return Err(Error::Inapplicable(
            "energy balance residual is defined for beta = 0".into(),
        ));
    }
    let g = &traj.grid;
    let mut spectral = Spectral::new(g);
    let mut du = vec![0.0; g.n_cells()];
    let energies: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| weighted_energy(&s.u, &s.p, params.delta, params.gamma, g))
        .collect();
    let mut out = DiagSeries::new("energy_residual");
    out.bound = Some(BoundId::EnergyL2.name().to_string());
    for (n, w) in traj.snapshots.windows(2).enumerate() {
        spectral.derivative_into(w[0].u.values(), &mut du);
        let dissipation = 2.0 * params.eps * l2_squared(&du, g);
        let rate = (energies[n + 1] - energies[n]) / (w[1].t - w[0].t);
        out.push(w[0].t, rate + dissipation);
    }
    Ok(out)
}

#[inline]
fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r * r;
        s * s * s
    }
}

#[inline]
fn bump_slope(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - r * r;
        -6.0 * r * s * s
    }
}

/// Nonnegative C^2 space-time bump `w b((t - t_c)/tau) b((x - x_c)/h)`
/// with `b(r) = (1 - r^2)^3` on `|r| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub t_center: f64,
    pub t_half_width: f64,
    pub x_center: f64,
    pub x_half_width: f64,
    pub weight: f64,
}

impl TestFunction {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.weight
            * bump((t - self.t_center) / self.t_half_width)
            * bump((x - self.x_center) / self.x_half_width)
    }

    fn validate(&self, grid: &Grid1D, t_final: f64) -> Result<()> {
        if !(self.weight >= 0.0) {
            return Err(Error::InvalidTestFunction(format!(
                "weight {} makes the test function negative",
                self.weight
            )));
        }
        if !(self.t_half_width > 0.0 && self.x_half_width > 0.0) {
            return Err(Error::InvalidTestFunction(
                "half widths must be positive".into(),
            ));
        }
        let eps = 1e-12 * (1.0 + t_final);
        if self.t_center - self.t_half_width < -eps
            || self.t_center + self.t_half_width > t_final + eps
        {
            return Err(Error::InvalidTestFunction(format!(
                "time support [{}, {}] leaves [0, {t_final}]",
                self.t_center - self.t_half_width,
                self.t_center + self.t_half_width
            )));
        }
        let l = grid.half_width();
        if self.x_center - self.x_half_width < -l - 1e-12 * l
            || self.x_center + self.x_half_width > l + 1e-12 * l
        {
            return Err(Error::InvalidTestFunction(format!(
                "space support [{}, {}] leaves [{}, {}]",
                self.x_center - self.x_half_width,
                self.x_center + self.x_half_width,
                -l,
                l
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestFunctionSet {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionSet {
    /// Overlapping lattice of unit-weight bumps, `nt` in time over `(0, t_final)`
    /// and `nx` in space over `window`. Spatial centres and half widths are
    /// snapped to the grid.
    pub fn lattice(grid: &Grid1D, t_final: f64, window: Window, nt: usize, nx: usize) -> Self {
        let dx = grid.dx();
        let tau = t_final / (nt + 1) as f64;
        let h = (((window.hi - window.lo) / (nx + 1) as f64) / dx)
            .round()
            .max(2.0)
            * dx;
        let mut functions = Vec::with_capacity(nt * nx);
        for j in 0..nt {
            let t_center = tau * (j + 1) as f64;
            for i in 0..nx {
                let raw = window.lo + h * (i + 1) as f64;
                let node = ((raw + grid.half_width()) / dx).round();
                let x_center = -grid.half_width() + node * dx;
                functions.push(TestFunction {
                    t_center,
                    t_half_width: tau,
                    x_center,
                    x_half_width: h,
                    weight: 1.0,
                });
            }
        }
        Self { functions }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyResidual {
    /// Minimum over the test functions.
    pub worst: f64,
    pub values: Vec<f64>,
}

/// Weak entropy inequality functional
/// `int int eta(u) phi_t + q(u) phi_x + gamma eta'(u) P phi + int eta(u0) phi(0, .)`
/// for each test function. Entropy-admissible runs give values `>= -tol`.
///
/// The `eta phi_t` term is integrated by parts against the piecewise-linear
/// interpolant of `eta(u)` between snapshots; the remaining terms use the
/// trapezoid rule on snapshot times.
pub fn entropy_residual(
    traj: &Trajectory,
    pair: &EntropyPair,
    tests: &TestFunctionSet,
) -> Result<EntropyResidual> {
    let g = &traj.grid;
    let t_final = traj.final_time();
    for phi in &tests.functions {
        phi.validate(g, t_final)?;
    }
    if tests.functions.is_empty() {
        return Err(Error::InvalidTestFunction("empty test function set".into()));
    }
    let gamma = traj.params.gamma;
    let dx = g.dx();
    let n = g.n_cells();

    let eta: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|s| s.u.values().iter().map(|&v| pair.eta(v)).collect())
        .collect();
    let q: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|s| s.u.values().iter().map(|&v| pair.q(v)).collect())
        .collect();
    let source: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|s| {
            s.u.values()
                .iter()
                .zip(s.p.values())
                .map(|(&u, &p)| gamma * pair.deta(u) * p)
                .collect()
        })
        .collect();
    let times = traj.times();

    let mut values = Vec::with_capacity(tests.functions.len());
    for phi in &tests.functions {
        let (nodes, bx, dbx): (Vec<usize>, Vec<f64>, Vec<f64>) = (0..n)
            .filter_map(|i| {
                let r = (g.x(i) - phi.x_center) / phi.x_half_width;
                (r.abs() < 1.0).then(|| (i, bump(r), bump_slope(r) / phi.x_half_width))
            })
            .fold((vec![], vec![], vec![]), |mut acc, (i, b, d)| {
                acc.0.push(i);
                acc.1.push(b);
                acc.2.push(d);
                acc
            });
        let lo = phi.t_center - phi.t_half_width;
        let hi = phi.t_center + phi.t_half_width;
        let first = times.partition_point(|&t| t < lo).saturating_sub(1);
        let last = (times.partition_point(|&t| t <= hi) + 1).min(times.len());

        let moments = |k: usize| -> (f64, f64) {
            let mut a = 0.0;
            let mut s = 0.0;
            for (j, &i) in nodes.iter().enumerate() {
                a += eta[k][i] * bx[j];
                s += q[k][i] * dbx[j] + source[k][i] * bx[j];
            }
            (a * dx, s * dx)
        };
        let bt = |t: f64| bump((t - phi.t_center) / phi.t_half_width);

        let mut total = 0.0;
        let (mut a_prev, mut s_prev) = moments(first);
        let mut b_prev = bt(times[first]);
        for k in first + 1..last {
            let (a, s) = moments(k);
            let b = bt(times[k]);
            let dt = times[k] - times[k - 1];
            total += -0.5 * (b_prev + b) * (a - a_prev) + 0.5 * dt * (b_prev * s_prev + b * s);
            a_prev = a;
            s_prev = s;
            b_prev = b;
        }
        // Boundary term of the time integration by parts at t_final; the
        // one at t = 0 cancels the initial-data term exactly.
        if last == times.len() {
            total += a_prev * b_prev;
        }
        values.push(phi.weight * total);
    }
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EntropyResidual { worst, values })
}

/// Half-open spatial window `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn full(grid: &Grid1D) -> Self {
        Self {
            lo: -grid.half_width(),
            hi: grid.half_width(),
        }
    }

    /// `[-L/2, L/2)`, away from the periodic seam.
    pub fn central_half(grid: &Grid1D) -> Self {
        Self {
            lo: -0.5 * grid.half_width(),
            hi: 0.5 * grid.half_width(),
        }
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// Windowed Riemann-sum `L^p` norm of `a - b`; `p = f64::INFINITY` gives the max.
pub fn lp_distance(a: &Field, b: &Field, p: f64, window: Window, grid: &Grid1D) -> Result<f64> {
    a.check_grid(grid)?;
    b.check_grid(grid)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!(
            "norm exponent must be >= 1, got {p}"
        )));
    }
    let diffs: Vec<f64> = grid
        .nodes()
        .zip(a.values().iter().zip(b.values()))
        .filter(|(x, _)| window.contains(*x))
        .map(|(_, (x, y))| (x - y).abs())
        .collect();
    if diffs.is_empty() {
        return Err(Error::EmptyWindow {
            lo: window.lo,
            hi: window.hi,
        });
    }
    if p.is_infinite() {
        return Ok(diffs.into_iter().fold(0.0, f64::max));
    }
    let dx = grid.dx();
    if p == 1.0 {
        return Ok(diffs.iter().sum::<f64>() * dx);
    }
    Ok((diffs.iter().map(|d| d.powf(p)).sum::<f64>() * dx).powf(1.0 / p))
}

/// A priori bounds checked against a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `sup_t ||u||_inf` against `||u0||_inf`.
    #[serde(rename = "u_linf")]
    LinfU,
    /// `sup_t (||u||^2 + delta gamma ||P||^2)` against its initial value.
    #[serde(rename = "energy_l2")]
    EnergyL2,
    /// `sup_t ||P||_inf` against `delta^{-3/4} gamma^{-1/4} eps^{-1/4}`.
    #[serde(rename = "p_linf")]
    LinfP,
    /// `sup_t ||u||_inf` against `beta^{-1/3}`.
    #[serde(rename = "u_linf_dispersive")]
    LinfUDispersive,
    /// `sup_t ||u||_{L^6}` against `||u0||_{L^6}`.
    #[serde(rename = "u_l6")]
    L6U,
    /// `||P||_inf^2 <= ||P||_2 ||P_x||_2` on every snapshot.
    #[serde(rename = "p_interpolation")]
    Interpolation,
}

impl BoundId {
    pub const ALL: [BoundId; 6] = [
        BoundId::LinfU,
        BoundId::EnergyL2,
        BoundId::LinfP,
        BoundId::LinfUDispersive,
        BoundId::L6U,
        BoundId::Interpolation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundId::LinfU => "u_linf",
            BoundId::EnergyL2 => "energy_l2",
            BoundId::LinfP => "p_linf",
            BoundId::LinfUDispersive => "u_linf_dispersive",
            BoundId::L6U => "u_l6",
            BoundId::Interpolation => "p_interpolation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    /// Cap on the fitted constant used by [`bound_monitor`].
    pub fn default_cap(&self) -> f64 {
        match self {
            BoundId::LinfU => 2.0,
            BoundId::EnergyL2 => 1.0 + 1e-10,
            BoundId::LinfP => 1.0,
            BoundId::LinfUDispersive => 1.0,
            BoundId::L6U => 2.0,
            BoundId::Interpolation => 1.0 + 1e-8,
        }
    }

    pub fn applies_to(&self, params: &crate::model::ParamSet) -> bool {
        match self {
            BoundId::LinfP => params.eps > 0.0 && params.delta > 0.0 && params.gamma > 0.0,
            BoundId::LinfUDispersive => params.beta > 0.0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: BoundId,
    pub scaling_expr: String,
    pub scaling: f64,
    pub measured: f64,
    /// `measured / scaling`.
    pub constant: f64,
    pub cap: f64,
    pub pass: bool,
}

pub fn bound_monitor(traj: &Trajectory, bound: BoundId) -> Result<BoundReport> {
    bound_monitor_with_cap(traj, bound, bound.default_cap())
}

pub fn bound_monitor_with_cap(traj: &Trajectory, bound: BoundId, cap: f64) -> Result<BoundReport> {
    let p = traj.params;
    if !bound.applies_to(&p) {
        return Err(Error::Inapplicable(format!(
            "bound {} does not apply to eps={}, beta={}, delta={}, gamma={}",
            bound.name(),
            p.eps,
            p.beta,
            p.delta,
            p.gamma
        )));
    }
    let g = &traj.grid;
    let snaps = &traj.snapshots;
    let sup =
        |f: &dyn Fn(&crate::solver::State) -> f64| snaps.iter().map(f).fold(0.0_f64, f64::max);
    let (scaling_expr, scaling, measured) = match bound {
        BoundId::LinfU => (
            "||u0||_inf".to_string(),
            snaps[0].u.max_abs(),
            sup(&|s| s.u.max_abs()),
        ),
        BoundId::EnergyL2 => (
            "E(0)".to_string(),
            weighted_energy(&snaps[0].u, &snaps[0].p, p.delta, p.gamma, g),
            sup(&|s| weighted_energy(&s.u, &s.p, p.delta, p.gamma, g)),
        ),
        BoundId::LinfP => (
            "delta^-3/4 gamma^-1/4 eps^-1/4".to_string(),
            1.0 / (p.delta.powf(0.75) * p.gamma.powf(0.25) * p.eps.powf(0.25)),
            sup(&|s| s.p.max_abs()),
        ),
        BoundId::LinfUDispersive => (
            "beta^-1/3".to_string(),
            p.beta.powf(-1.0 / 3.0),
            sup(&|s| s.u.max_abs()),
        ),
        BoundId::L6U => (
            "||u0||_6".to_string(),
            lp_norm(snaps[0].u.values(), 6.0, g),
            sup(&|s| lp_norm(s.u.values(), 6.0, g)),
        ),
        BoundId::Interpolation => {
            let mut spectral = Spectral::new(g);
            let n = g.n_cells();
            let (mut resolved, mut dp) = (vec![0.0; n], vec![0.0; n]);
            let mut worst = 0.0_f64;
            for s in snaps {
                spectral.resolved_part_into(s.p.values(), &mut resolved);
                spectral.derivative_into(&resolved, &mut dp);
                let lhs = max_abs(&resolved).powi(2);
                let rhs = (l2_squared(&resolved, g) * l2_squared(&dp, g)).sqrt();
                if lhs > 0.0 {
                    worst = worst.max(lhs / rhs);
                }
            }
            ("||P||_2 ||P_x||_2 / ||P||_inf^2".to_string(), 1.0, worst)
        }
    };
    let constant = if measured == 0.0 {
        0.0
    } else if scaling > 0.0 {
        measured / scaling
    } else {
        f64::INFINITY
    };
    Ok(BoundReport {
        bound,
        scaling_expr,
        scaling,
        measured,
        constant,
        cap,
        pass: constant <= cap,
    })
}

/// Least-squares slope of `ln C_k` against `k`; `None` unless there are at
/// least two positive constants.
pub fn constant_log_slope(constants: &[f64]) -> Option<f64> {
    if constants.len() < 2 || constants.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return None;
    }
    let n = constants.len() as f64;
    let xs: Vec<f64> = (0..constants.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = constants.iter().map(|c| c.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Formats series as `name,time,value` rows with 17 significant digits.
pub fn series_to_csv(series: &[DiagSeries]) -> String {
    let mut out = String::from("name,time,value\n");
    for s in series {
        for (t, v) in s.times.iter().zip(&s.values) {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", s.name, t, v));
        }
    }
    out
}

/// Inverse of [`series_to_csv`]. Series order follows first appearance.
pub fn series_from_csv(text: &str) -> Result<Vec<DiagSeries>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "name,time,value")) => {}
        _ => return Err(Error::parse(1, "expected header `name,time,value`")),
    }
    let mut out: Vec<DiagSeries> = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(name), Some(t), Some(v), None) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(Error::parse(i + 1, "expected three columns"));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(i + 1, format!("bad number `{s}`: {e}")))
        };
        let (t, v) = (parse(t)?, parse(v)?);
        match out.iter_mut().find(|s| s.name == name) {
            Some(s) => {
                if s.times.last().is_some_and(|&last| !(t > last)) {
                    return Err(Error::parse(i + 1, "times must be strictly increasing"));
                }
                s.push(t, v)
            }
            None => {
                let mut s = DiagSeries::new(name);
                s.push(t, v);
                out.push(s);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_entropy_pair, EntropyFamily, FluxModel, ParamSet};
    use crate::solver::{solve, SolverOptions};
    use std::f64::consts::PI;

    fn g() -> Grid1D {
        Grid1D::new(1.0, 64).unwrap()
    }

    #[test]
    fn means() {
        let g = g();
        assert_eq!(mean_u(&Field::zeros(&g, 0.0), &g), 0.0);
        let s = Field::from_fn(&g, 0.0, |x| (2.0 * PI * x).sin()).unwrap();
        assert!(mean_u(&s, &g).abs() < 1e-14);
        let one = Field::from_fn(&g, 0.0, |_| 1.0).unwrap();
        assert!((mean_p(&one, &g) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_energy_closed_form() {
        let g = g();
        let u = Field::from_fn(&g, 0.0, |x| (PI * x).sin()).unwrap();
        let p = Field::from_fn(&g, 0.0, |x| -(PI * x).cos() / PI).unwrap();
        let e = weighted_energy(&u, &p, 0.1, 0.1, &g);
        assert!((e - (1.0 + 0.01 / (PI * PI))).abs() < 1e-13);
        assert!((e - 1.0010132).abs() < 1e-7);
        let e0 = weighted_energy(&u, &p, 0.1, 0.0, &g);
        assert!((e0 - 1.0).abs() < 1e-13);
        let z = Field::zeros(&g, 0.0);
        assert_eq!(weighted_energy(&z, &z, 0.3, 0.3, &g), 0.0);
    }

    #[test]
    fn lp_distance_cases() {
        let g = g();
        let a = Field::from_fn(&g, 0.0, |x| x.sin()).unwrap();
        let w = Window::full(&g);
        assert_eq!(lp_distance(&a, &a, 1.0, w, &g).unwrap(), 0.0);

        let b = Field::from_fn(&g, 0.0, |x| x.sin() + 0.25).unwrap();
        let win = Window { lo: -0.5, hi: 0.5 };
        let d = lp_distance(&a, &b, 1.0, win, &g).unwrap();
        assert!((d - 0.25 * 1.0).abs() < 1e-12);

        // Spike: one node of height 1. L1 = dx, L2 = sqrt(dx), Linf = 1.
        let mut spike = vec![0.0; 64];
        spike[10] = 1.0;
        let spike = Field::new(spike, 0.0).unwrap();
        let z = Field::zeros(&g, 0.0);
        let l1 = lp_distance(&spike, &z, 1.0, w, &g).unwrap();
        let l2 = lp_distance(&spike, &z, 2.0, w, &g).unwrap();
        let li = lp_distance(&spike, &z, f64::INFINITY, w, &g).unwrap();
        assert!((l1 - g.dx()).abs() < 1e-15);
        assert!((l2 - g.dx().sqrt()).abs() < 1e-15);
        assert_eq!(li, 1.0);
        // Hoelder on a domain of length 2: ||.||_1 <= sqrt(2) ||.||_2.
        assert!(l1 <= 2f64.sqrt() * l2);

        let empty = Window {
            lo: 0.001,
            hi: 0.002,
        };
        assert!(matches!(
            lp_distance(&a, &b, 1.0, empty, &g),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = DiagSeries::new("energy");
        s.push(0.0, 1.0 / 3.0);
        s.push(0.1, std::f64::consts::E);
        let mut r = DiagSeries::new("mean_u");
        r.push(0.0, -1.2345678901234567e-17);
        let text = series_to_csv(&[s.clone(), r.clone()]);
        let back = series_from_csv(&text).unwrap();
        assert_eq!(back[0].values, s.values);
        assert_eq!(back[1].values, r.values);
        assert_eq!(back[0].times, s.times);
    }

    #[test]
    fn negative_test_function_is_rejected() {
        let g = g();
        let traj = solve(
            &Field::zeros(&g, 0.0),
            &ParamSet::zero(),
            &FluxModel::quadratic(),
            &g,
            &SolverOptions::new(0.5),
        )
        .unwrap();
        let pair = make_entropy_pair(&FluxModel::quadratic(), EntropyFamily::Square).unwrap();
        let mut set = TestFunctionSet::lattice(&g, 0.5, Window::full(&g), 2, 2);
        let r = entropy_residual(&traj, &pair, &set).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        set.functions[0].weight = -1.0;
        assert!(matches!(
            entropy_residual(&traj, &pair, &set),
            Err(Error::InvalidTestFunction(_))
        ));
    }

    #[test]
    fn zero_run_passes_every_bound() {
        let g = g();
        let params = ParamSet::new(0.1, 0.01, 0.1, 0.1).unwrap();
        let traj = solve(
            &Field::zeros(&g, 0.0),
            &params,
            &FluxModel::quadratic(),
            &g,
            &SolverOptions::new(0.2),
        )
        .unwrap();
        for id in BoundId::ALL {
            let r = bound_monitor(&traj, id).unwrap();
            assert_eq!(r.measured, 0.0, "{id:?}");
            assert!(r.pass, "{id:?}");
        }
    }

    #[test]
    fn inapplicable_bounds() {
        let g = g();
        let traj = solve(
            &Field::zeros(&g, 0.0),
            &ParamSet::zero(),
            &FluxModel::quadratic(),
            &g,
            &SolverOptions::new(0.1),
        )
        .unwrap();
        assert!(matches!(
            bound_monitor(&traj, BoundId::LinfUDispersive),
            Err(Error::Inapplicable(_))
        ));
        assert!(matches!(
            bound_monitor(&traj, BoundId::LinfP),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn log_slope() {
        let c: Vec<f64> = (0..5).map(|k| 2f64.powi(-k)).collect();
        assert!((constant_log_slope(&c).unwrap() + 2f64.ln()).abs() < 1e-12);
        assert!(constant_log_slope(&[1.0]).is_none());
        assert!(constant_log_slope(&[1.0, 0.0]).is_none());
    }
}
