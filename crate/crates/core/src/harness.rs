//! Parameter sequences along the scaling regimes, admissible initial data,
//! sweeps against a reference entropy solution and convergence-rate fits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    bound_monitor, constant_log_slope, entropy_residual, lp_distance, BoundId, BoundReport,
    TestFunctionSet, Window,
};
use crate::error::{Error, Result};
use crate::model::{make_entropy_pair, EntropyFamily, Field, FluxModel, Grid1D, ParamSet};
use crate::nonlocal::{antiderivative, Gauge};
use crate::reference::{godunov_solve, SmoothProfile};
use crate::solver::{solve, SolverOptions, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    /// `beta = 0`, `gamma = c_gamma eps^{1/3} delta`.
    #[serde(rename = "OH")]
    Oh,
    /// `beta = c_beta eps^2`, `gamma = c_gamma eps delta`.
    #[serde(rename = "KdVdist")]
    KdvDist,
    /// `beta = c_beta eps^{2 + theta}`, `gamma = c_gamma eps delta`.
    #[serde(rename = "KdVent")]
    KdvEnt,
}

/// Geometric parameter sequence `eps_k = eps0 2^-k`, `delta_k = delta0 2^-k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub eps0: f64,
    pub delta0: f64,
    pub c_gamma: f64,
    #[serde(default)]
    pub c_beta: f64,
    #[serde(default)]
    pub theta: f64,
    pub k_max: usize,
}

impl Regime {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("regime.eps0", self.eps0), ("regime.delta0", self.delta0)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(field, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.c_gamma.is_finite() && self.c_gamma > 0.0) {
            return Err(Error::config("regime.c_gamma", "must be positive"));
        }
        if self.kind != RegimeKind::Oh && !(self.c_beta.is_finite() && self.c_beta > 0.0) {
            return Err(Error::config("regime.c_beta", "must be positive"));
        }
        if self.kind == RegimeKind::KdvEnt && !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::config("regime.theta", "must be positive"));
        }
        if self.k_max > 60 {
            return Err(Error::config("regime.k_max", "must be at most 60"));
        }
        Ok(())
    }

    /// Parameters at level `k`, without range checks.
    pub fn params_at(&self, k: usize) -> ParamSet {
        let scale = 0.5_f64.powi(k as i32);
        let eps = self.eps0 * scale;
        let delta = self.delta0 * scale;
        let (beta, gamma) = match self.kind {
            RegimeKind::Oh => (0.0, self.c_gamma * eps.cbrt() * delta),
            RegimeKind::KdvDist => (self.c_beta * eps * eps, self.c_gamma * eps * delta),
            RegimeKind::KdvEnt => (
                self.c_beta * eps.powf(2.0 + self.theta),
                self.c_gamma * eps * delta,
            ),
        };
        ParamSet {
            eps,
            beta,
            delta,
            gamma,
        }
    }
}

/// `k_max + 1` parameter sets, each inside `(0, 1)`.
pub fn regime_sequence(regime: &Regime) -> Result<Vec<ParamSet>> {
    regime.validate()?;
    (0..=regime.k_max)
        .map(|k| {
            let p = regime.params_at(k);
            for (name, v) in [
                ("eps", p.eps),
                ("beta", p.beta),
                ("delta", p.delta),
                ("gamma", p.gamma),
            ] {
                let active = name != "beta" || regime.kind != RegimeKind::Oh;
                if active && !(v > 0.0 && v < 1.0) {
                    return Err(Error::RegimeOverflow { k, name, value: v });
                }
            }
            Ok(p)
        })
        .collect()
}

fn default_ramp_cells() -> f64 {
    3.0
}

/// Initial profiles with zero mean on the periodic cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// `sum_j a_j sin(m_j pi x / L)`.
    SineModes { modes: Vec<(u32, f64)> },
    /// Second derivative of the bump `exp(-1 / (1 - (x/w)^2))`, scaled so the
    /// central value is `-amplitude`.
    DoubleBump { width: f64, amplitude: f64 },
    /// Antisymmetric jump `u_left = -u_right` at `x = 0` (and back at the
    /// seam), smoothed by a tanh ramp of `ramp_cells` cells; `0` keeps it sharp.
    SmoothedRiemann {
        u_left: f64,
        u_right: f64,
        #[serde(default = "default_ramp_cells")]
        ramp_cells: f64,
    },
}

impl Profile {
    pub fn sine(mode: u32, amplitude: f64) -> Self {
        Profile::SineModes {
            modes: vec![(mode, amplitude)],
        }
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        match self {
            Profile::SineModes { modes } => {
                if modes.is_empty() {
                    return Err(Error::config("init.modes", "at least one mode is required"));
                }
                for &(m, a) in modes {
                    if m == 0 {
                        return Err(Error::config("init.modes", "mode 0 has nonzero mean"));
                    }
                    if m as usize >= grid.n_cells() / 2 {
                        return Err(Error::config(
                            "init.modes",
                            format!("mode {m} is not resolved"),
                        ));
                    }
                    if !a.is_finite() {
                        return Err(Error::config("init.modes", "amplitude must be finite"));
                    }
                }
            }
            Profile::DoubleBump { width, amplitude } => {
                if !(*width > 0.0 && *width < grid.half_width()) {
                    return Err(Error::config("init.width", "must lie in (0, L)"));
                }
                if !amplitude.is_finite() {
                    return Err(Error::config("init.amplitude", "must be finite"));
                }
            }
            Profile::SmoothedRiemann {
                u_left,
                u_right,
                ramp_cells,
            } => {
                if !(u_left.is_finite() && u_right.is_finite()) {
                    return Err(Error::config("init.u_left", "states must be finite"));
                }
                if *u_left != -*u_right {
                    return Err(Error::config(
                        "init.u_right",
                        "only antisymmetric jumps (u_left = -u_right) have zero mean",
                    ));
                }
                if !(ramp_cells.is_finite() && *ramp_cells >= 0.0) {
                    return Err(Error::config("init.ramp_cells", "must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    fn value(&self, x: f64, grid: &Grid1D) -> f64 {
        let l = grid.half_width();
        match self {
            Profile::SineModes { modes } => modes
                .iter()
                .map(|&(m, a)| a * (m as f64 * PI * x / l).sin())
                .sum(),
            Profile::DoubleBump { width, amplitude } => {
                let s = x / width;
                if s.abs() >= 1.0 {
                    return 0.0;
                }
                let d = 1.0 - s * s;
                let psi = (-1.0 / d).exp();
                let g1 = -2.0 * s / (d * d);
                let g2 = -2.0 / (d * d) - 8.0 * s * s / (d * d * d);
                let second = psi * (g1 * g1 + g2);
                // second(0) = -2/e
                amplitude * second / (2.0 / std::f64::consts::E)
            }
            Profile::SmoothedRiemann {
                u_right,
                ramp_cells,
                ..
            } => {
                let w = ramp_cells * grid.dx();
                if w == 0.0 {
                    return if x < 0.0 { -u_right } else { *u_right };
                }
                u_right * ((x / w).tanh() - ((x - l) / w).tanh() - ((x + l) / w).tanh())
            }
        }
    }

    fn slope(&self, x: f64, grid: &Grid1D) -> f64 {
        let l = grid.half_width();
        match self {
            Profile::SineModes { modes } => modes
                .iter()
                .map(|&(m, a)| {
                    let k = m as f64 * PI / l;
                    a * k * (k * x).cos()
                })
                .sum(),
            Profile::DoubleBump { .. } => {
                let h = 1e-5 * grid.dx().max(1e-3);
                (self.value(x + h, grid) - self.value(x - h, grid)) / (2.0 * h)
            }
            Profile::SmoothedRiemann {
                u_right,
                ramp_cells,
                ..
            } => {
                let w = ramp_cells * grid.dx();
                if w == 0.0 {
                    return 0.0;
                }
                let sech2 = |z: f64| 1.0 - z.tanh().powi(2);
                u_right / w * (sech2(x / w) - sech2((x - l) / w) - sech2((x + l) / w))
            }
        }
    }

    /// View of the profile as a smooth periodic function on `grid`'s domain.
    pub fn on_grid<'a>(&'a self, grid: &'a Grid1D) -> ProfileOnGrid<'a> {
        ProfileOnGrid {
            profile: self,
            grid,
        }
    }

    /// Samples the profile and removes the roundoff-level discrete mean.
    pub fn realize(&self, grid: &Grid1D) -> Result<InitData> {
        self.validate(grid)?;
        let mut values: Vec<f64> = grid.nodes().map(|x| self.value(x, grid)).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let field = Field::new(values, 0.0)?;
        let primitive = antiderivative(&field, grid, Gauge::ZeroMean)?;
        let scale = field.max_abs().max(1.0) * grid.length();
        let mean_u = crate::diagnostics::mean_u(&field, grid);
        let mean_p = crate::diagnostics::mean_p(&primitive, grid);
        if mean_u.abs() > 1e-12 * scale || mean_p.abs() > 1e-12 * scale {
            return Err(Error::MeanViolation {
                mean: mean_u.abs().max(mean_p.abs()),
                tolerance: 1e-12 * scale,
            });
        }
        Ok(InitData {
            profile: self.clone(),
            field,
        })
    }
}

pub struct ProfileOnGrid<'a> {
    profile: &'a Profile,
    grid: &'a Grid1D,
}

impl SmoothProfile for ProfileOnGrid<'_> {
    fn value(&self, x: f64) -> f64 {
        let l = self.grid.half_width();
        let wrapped = (x + l).rem_euclid(2.0 * l) - l;
        self.profile.value(wrapped, self.grid)
    }

    fn slope(&self, x: f64) -> f64 {
        let l = self.grid.half_width();
        let wrapped = (x + l).rem_euclid(2.0 * l) - l;
        self.profile.slope(wrapped, self.grid)
    }

    fn period(&self) -> f64 {
        self.grid.length()
    }
}

/// A realized initial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct InitData {
    pub profile: Profile,
    pub field: Field,
}

/// Least-squares fit of `ln d = slope ln eps + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_rate(distances: &[f64], eps_values: &[f64]) -> Result<RateFit> {
    if distances.len() != eps_values.len() {
        return Err(Error::InsufficientData(format!(
            "{} distances for {} parameter values",
            distances.len(),
            eps_values.len()
        )));
    }
    let points: Vec<(f64, f64)> = eps_values
        .iter()
        .zip(distances)
        .filter(|(e, d)| e.is_finite() && **e > 0.0 && d.is_finite() && **d > 0.0)
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 finite positive distances, have {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all parameter values coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Everything a sweep needs, already validated.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub regime: Regime,
    pub profile: Profile,
    pub model: FluxModel,
    pub grid: Grid1D,
    pub options: SolverOptions,
    pub reference_refine: usize,
    pub window: Window,
    pub norms: Vec<f64>,
    /// Entropy used for the per-cell entropy floor.
    pub entropy: EntropyFamily,
    /// Test-function lattice size `(time, space)`.
    pub lattice: (usize, usize),
    pub keep_trajectories: bool,
}

impl SweepPlan {
    pub fn new(
        regime: Regime,
        profile: Profile,
        model: FluxModel,
        grid: Grid1D,
        options: SolverOptions,
        reference_refine: usize,
    ) -> Self {
        Self {
            regime,
            profile,
            model,
            window: Window::central_half(&grid),
            grid,
            options,
            reference_refine,
            norms: vec![1.0, 2.0],
            entropy: EntropyFamily::Square,
            lattice: (4, 8),
            keep_trajectories: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellMetrics {
    /// `(p, distance)` for each configured norm.
    pub distances: Vec<(f64, f64)>,
    pub entropy_floor: f64,
    pub bounds: Vec<BoundReport>,
}

impl CellMetrics {
    pub fn distance(&self, p: f64) -> Option<f64> {
        self.distances
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, d)| *d)
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub k: usize,
    pub params: ParamSet,
    pub outcome: std::result::Result<CellMetrics, String>,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub reference: Field,
    /// Per norm: the fit of distance against `eps_k`, or why it is undefined.
    pub rates: Vec<(f64, std::result::Result<RateFit, String>)>,
    /// Per bound: least-squares slope of `ln C_k` against `k`.
    pub bound_slopes: Vec<(BoundId, Option<f64>)>,
    pub norms: Vec<f64>,
}

impl SweepResult {
    /// Distances for norm `p`, `None` for failed cells.
    pub fn distance_column(&self, p: f64) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| c.outcome.as_ref().ok().and_then(|m| m.distance(p)))
            .collect()
    }

    pub fn entropy_floors(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| c.outcome.as_ref().ok().map(|m| m.entropy_floor))
            .collect()
    }

    pub fn bound_constants(&self, bound: BoundId) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| {
                c.outcome
                    .as_ref()
                    .ok()
                    .and_then(|m| m.bounds.iter().find(|b| b.bound == bound))
                    .map(|b| b.constant)
            })
            .collect()
    }

    pub fn rate(&self, p: f64) -> Option<&RateFit> {
        self.rates
            .iter()
            .find(|(q, _)| *q == p)
            .and_then(|(_, r)| r.as_ref().ok())
    }
}

fn run_cell(
    plan: &SweepPlan,
    u0: &Field,
    reference: &Field,
    k: usize,
    params: ParamSet,
) -> CellResult {
    let run = || -> Result<(CellMetrics, Trajectory)> {
        let traj = solve(u0, &params, &plan.model, &plan.grid, &plan.options)?;
        let last = &traj.last().u;
        let distances = plan
            .norms
            .iter()
            .map(|&p| Ok((p, lp_distance(last, reference, p, plan.window, &plan.grid)?)))
            .collect::<Result<Vec<_>>>()?;
        let pair = make_entropy_pair(&plan.model, plan.entropy)?;
        let tests = TestFunctionSet::lattice(
            &plan.grid,
            traj.final_time(),
            plan.window,
            plan.lattice.0,
            plan.lattice.1,
        );
        let entropy_floor = entropy_residual(&traj, &pair, &tests)?.worst;
        let bounds = BoundId::ALL
            .into_iter()
            .filter(|b| b.applies_to(&params))
            .map(|b| bound_monitor(&traj, b))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            CellMetrics {
                distances,
                entropy_floor,
                bounds,
            },
            traj,
        ))
    };
    match run() {
        Ok((metrics, traj)) => CellResult {
            k,
            params,
            outcome: Ok(metrics),
            trajectory: plan.keep_trajectories.then_some(traj),
        },
        Err(e) => CellResult {
            k,
            params,
            outcome: Err(e.to_string()),
            trajectory: None,
        },
    }
}

/// Runs every level of the regime against one reference solution.
///
/// Cells run on up to `jobs` threads; results are ordered by `k` and do not
/// depend on `jobs`.
pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<SweepResult> {
    let sequence = regime_sequence(&plan.regime)?;
    plan.options.validate()?;
    let init = plan.profile.realize(&plan.grid)?;
    let reference = godunov_solve(
        &init.field,
        &plan.model,
        &plan.grid,
        plan.options.t_end,
        plan.reference_refine,
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    let cells: Vec<CellResult> = pool.install(|| {
        sequence
            .par_iter()
            .enumerate()
            .map(|(k, &params)| run_cell(plan, &init.field, &reference, k, params))
            .collect()
    });
    if cells.iter().all(|c| c.outcome.is_err()) {
        return Err(Error::SweepFailed);
    }

    let eps: Vec<f64> = cells.iter().map(|c| c.params.eps).collect();
    let mut result = SweepResult {
        cells,
        reference,
        rates: Vec::new(),
        bound_slopes: Vec::new(),
        norms: plan.norms.clone(),
    };
    for &p in &plan.norms {
        let column: Vec<f64> = result
            .distance_column(p)
            .into_iter()
            .map(|d| d.unwrap_or(f64::NAN))
            .collect();
        let fit = fit_rate(&column, &eps).map_err(|e| e.to_string());
        result.rates.push((p, fit));
    }
    for b in BoundId::ALL {
        let cs = result.bound_constants(b);
        if cs.iter().any(|c| c.is_some()) {
            let vals: Vec<f64> = cs.into_iter().flatten().collect();
            result.bound_slopes.push((b, constant_log_slope(&vals)));
        }
    }
    Ok(result)
}
