//! Method-of-lines integrator for
//!
//! ```text
//! u_t + f(u)_x = gamma P + eps u_xx + beta u_xxx
//! -delta P_t + P_x = u          (delta > 0)
//! P_x = u, zero-mean P          (delta = 0)
//! ```
//!
//! Space: two-point numerical flux for `f`, central stencils for the
//! viscous and dispersive terms, spectral `D1` in the `P` equation.
//! Time: SSP-RK3 with a CFL-limited step.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagSeries};
use crate::error::{Error, Result};
use crate::model::{Field, FluxModel, Grid1D, ParamSet};
use crate::nonlocal::{check_zero_mean, Spectral};

/// Floor for the wave-speed and coefficient denominators in [`stable_dt`].
const SPEED_FLOOR: f64 = 1e-12;
/// Relative overshoot of `dt` accepted to land exactly on `t_end`.
const FINAL_STEP_SLACK: f64 = 1e-9;

/// Interface flux for `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Limiter {
    /// Plain central flux `(f_l + f_r) / 2`. Not entropy stable; kept as a
    /// negative control for the entropy diagnostics.
    None,
    /// Rusanov flux with the local wave speed `max |f'|` over the pair.
    LocalLaxFriedrichs,
    /// Lax-Friedrichs flux with one wave speed `max |f'|` over the grid.
    /// Default: paired with pointwise `q(u)` its entropy production against
    /// `u^2/2` is nonnegative inside rarefactions, where the local variant
    /// leaves an O(dx) negative consistency term.
    #[default]
    GlobalLaxFriedrichs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub cfl_hyp: f64,
    pub cfl_visc: f64,
    pub cfl_disp: f64,
    pub t_end: f64,
    /// Minimum number of accepted steps between snapshots.
    pub snapshot_stride: usize,
    /// Optional minimum simulated time between snapshots (step-aligned).
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
    pub limiter: Limiter,
    pub max_steps: usize,
}

impl SolverOptions {
    pub fn new(t_end: f64) -> Self {
        Self {
            cfl_hyp: 0.4,
            cfl_visc: 0.25,
            cfl_disp: 0.1,
            t_end,
            snapshot_stride: 1,
            snapshot_interval: None,
            limiter: Limiter::default(),
            max_steps: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [
            ("cfl_hyp", self.cfl_hyp),
            ("cfl_visc", self.cfl_visc),
            ("cfl_disp", self.cfl_disp),
        ] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::config(
                    format!("options.{name}"),
                    format!("Courant factor must lie in (0, 1], got {c}"),
                ));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config(
                "options.t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::config(
                "options.snapshot_stride",
                "must be at least 1",
            ));
        }
        if let Some(iv) = self.snapshot_interval {
            if !(iv.is_finite() && iv >= 0.0) {
                return Err(Error::config(
                    "options.snapshot_interval",
                    format!("must be nonnegative, got {iv}"),
                ));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("options.max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// `(u, P)` at one time. For `delta = 0`, `P` is the zero-mean primitive of `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub p: Field,
    pub t: f64,
}

impl State {
    /// Initial state with `P0` the zero-mean primitive of `u0`.
    pub fn initial(u0: &Field, grid: &Grid1D) -> Result<Self> {
        u0.check_grid(grid)?;
        check_zero_mean(u0.values(), grid)?;
        let mut p = vec![0.0; grid.n_cells()];
        Spectral::new(grid).antiderivative_into(u0.values(), &mut p);
        let t = u0.time();
        Ok(Self {
            u: u0.clone(),
            p: Field::new(p, t)?,
            t,
        })
    }
}

/// Snapshots plus diagnostics of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<State>,
    pub diagnostics: Vec<DiagSeries>,
    pub params: ParamSet,
    pub model: FluxModel,
    pub options: SolverOptions,
    pub grid: Grid1D,
    pub steps: usize,
}

impl Trajectory {
    pub fn initial(&self) -> &State {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &State {
        self.snapshots
            .last()
            .expect("trajectory has at least one snapshot")
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn series(&self, name: &str) -> Option<&DiagSeries> {
        self.diagnostics.iter().find(|s| s.name == name)
    }
}

/// Right-hand side evaluator with reusable buffers.
struct Rhs<'a> {
    params: ParamSet,
    model: &'a FluxModel,
    grid: Grid1D,
    limiter: Limiter,
    spectral: Spectral,
    interface: Vec<f64>,
    primitive: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(params: ParamSet, model: &'a FluxModel, grid: Grid1D, limiter: Limiter) -> Self {
        let n = grid.n_cells();
        Self {
            params,
            model,
            grid,
            limiter,
            spectral: Spectral::new(&grid),
            interface: vec![0.0; n],
            primitive: vec![0.0; n],
        }
    }

    /// Fills `du` (and `dp` when relaxed). `p` is ignored in the static case.
    fn eval(&mut self, u: &[f64], p: &[f64], du: &mut [f64], dp: &mut [f64]) {
        let n = u.len();
        let dx = self.grid.dx();
        let ParamSet {
            eps,
            beta,
            delta,
            gamma,
        } = self.params;

        let global = match self.limiter {
            Limiter::GlobalLaxFriedrichs => max_wave_speed(u, self.model),
            _ => 0.0,
        };
        for i in 0..n {
            let (ul, ur) = (u[i], u[(i + 1) % n]);
            let central = 0.5 * (self.model.eval(ul) + self.model.eval(ur));
            self.interface[i] = match self.limiter {
                Limiter::None => central,
                Limiter::LocalLaxFriedrichs => {
                    central - 0.5 * self.model.max_speed(ul, ur) * (ur - ul)
                }
                Limiter::GlobalLaxFriedrichs => central - 0.5 * global * (ur - ul),
            };
        }
        let inv_dx = 1.0 / dx;
        for (i, d) in du.iter_mut().enumerate() {
            let left = self.interface[(i + n - 1) % n];
            *d = -(self.interface[i] - left) * inv_dx;
        }

        if eps > 0.0 {
            let c = eps / (dx * dx);
            for i in 0..n {
                let (um, up) = (u[(i + n - 1) % n], u[(i + 1) % n]);
                du[i] += c * (up - 2.0 * u[i] + um);
            }
        }
        if beta > 0.0 {
            let c = beta / (2.0 * dx * dx * dx);
            for i in 0..n {
                let um2 = u[(i + n - 2) % n];
                let um1 = u[(i + n - 1) % n];
                let up1 = u[(i + 1) % n];
                let up2 = u[(i + 2) % n];
                du[i] += c * (up2 - 2.0 * up1 + 2.0 * um1 - um2);
            }
        }

        if delta > 0.0 {
            self.spectral.derivative_into(p, dp);
            for i in 0..n {
                dp[i] = (dp[i] - u[i]) / delta;
            }
            if gamma > 0.0 {
                for i in 0..n {
                    du[i] += gamma * p[i];
                }
            }
        } else if gamma > 0.0 {
            self.spectral.antiderivative_into(u, &mut self.primitive);
            for (d, p) in du.iter_mut().zip(&self.primitive) {
                *d += gamma * p;
            }
        }
    }
}

/// Time derivatives `(du/dt, dP/dt)` with the default flux; `dP/dt` is
/// present iff `delta > 0`.
pub fn semidiscrete_rhs(
    state: &State,
    params: &ParamSet,
    model: &FluxModel,
    grid: &Grid1D,
) -> Result<(Field, Option<Field>)> {
    semidiscrete_rhs_with(state, params, model, grid, Limiter::default())
}

pub fn semidiscrete_rhs_with(
    state: &State,
    params: &ParamSet,
    model: &FluxModel,
    grid: &Grid1D,
    limiter: Limiter,
) -> Result<(Field, Option<Field>)> {
    state.u.check_grid(grid)?;
    state.p.check_grid(grid)?;
    let n = grid.n_cells();
    let mut rhs = Rhs::new(*params, model, *grid, limiter);
    let mut du = vec![0.0; n];
    let mut dp = vec![0.0; n];
    rhs.eval(state.u.values(), state.p.values(), &mut du, &mut dp);
    let blow_up = |_| Error::BlowUp {
        step: 0,
        time: state.t,
    };
    let du = Field::new(du, state.t).map_err(blow_up)?;
    let dp = if params.is_relaxed() {
        Some(Field::new(dp, state.t).map_err(blow_up)?)
    } else {
        None
    };
    Ok((du, dp))
}

fn max_wave_speed(u: &[f64], model: &FluxModel) -> f64 {
    u.iter().fold(0.0_f64, |m, &v| m.max(model.deriv(v).abs()))
}

fn stable_dt_values(
    u: &[f64],
    params: &ParamSet,
    model: &FluxModel,
    grid: &Grid1D,
    options: &SolverOptions,
) -> f64 {
    let dx = grid.dx();
    let speed = max_wave_speed(u, model).max(SPEED_FLOOR);
    let mut dt = options.cfl_hyp * dx / speed;
    if params.eps > 0.0 {
        dt = dt.min(options.cfl_visc * dx * dx / params.eps.max(SPEED_FLOOR));
    }
    if params.beta > 0.0 {
        dt = dt.min(options.cfl_disp * dx * dx * dx / params.beta.max(SPEED_FLOOR));
    }
    if params.delta > 0.0 {
        // The relaxed P equation transports at speed 1/delta; the spectral
        // D1 reaches wavenumber pi/dx.
        dt = dt.min(options.cfl_hyp * params.delta * dx);
    }
    dt
}

/// Largest step admitted by the hyperbolic, viscous, dispersive and
/// relaxation limits; inactive terms drop out.
pub fn stable_dt(
    state: &State,
    params: &ParamSet,
    model: &FluxModel,
    grid: &Grid1D,
    options: &SolverOptions,
) -> f64 {
    stable_dt_values(state.u.values(), params, model, grid, options)
}

/// Integrates from `u0` to `options.t_end`.
pub fn solve(
    u0: &Field,
    params: &ParamSet,
    model: &FluxModel,
    grid: &Grid1D,
    options: &SolverOptions,
) -> Result<Trajectory> {
    params.validate()?;
    options.validate()?;
    let first = State::initial(&u0.clone().with_time(0.0), grid)?;
    let relaxed = params.is_relaxed();
    let n = grid.n_cells();

    let mut rhs = Rhs::new(*params, model, *grid, options.limiter);
    let mut u = first.u.values().to_vec();
    let mut p = first.p.values().to_vec();
    let (mut u1, mut p1) = (vec![0.0; n], vec![0.0; n]);
    let (mut u2, mut p2) = (vec![0.0; n], vec![0.0; n]);
    let (mut du, mut dp) = (vec![0.0; n], vec![0.0; n]);

    let mut snapshots = vec![first];
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut since_snapshot = 0usize;
    let mut last_snapshot_t = 0.0;
    let t_end = options.t_end;

    let snapshot = |u: &[f64], p: &[f64], t: f64, rhs: &mut Rhs| -> Result<State> {
        let p = if relaxed {
            p.to_vec()
        } else {
            let mut out = vec![0.0; n];
            rhs.spectral.antiderivative_into(u, &mut out);
            out
        };
        Ok(State {
            u: Field::new(u.to_vec(), t)?,
            p: Field::new(p, t)?,
            t,
        })
    };

    while t < t_end {
        if steps >= options.max_steps {
            snapshots.push(snapshot(&u, &p, t, &mut rhs)?);
            let mut partial = Trajectory {
                snapshots,
                diagnostics: Vec::new(),
                params: *params,
                model: model.clone(),
                options: *options,
                grid: *grid,
                steps,
            };
            partial.diagnostics = diagnostics::standard_series(&partial);
            return Err(Error::IncompleteRun {
                partial: Box::new(partial),
            });
        }
        let mut dt = stable_dt_values(&u, params, model, grid, options);
        // Absorb a roundoff-sized remainder instead of taking a sliver step.
        let last = t + dt * (1.0 + FINAL_STEP_SLACK) >= t_end;
        if last {
            dt = t_end - t;
        }

        // SSP-RK3, Shu-Osher form.
        rhs.eval(&u, &p, &mut du, &mut dp);
        for i in 0..n {
            u1[i] = u[i] + dt * du[i];
        }
        if relaxed {
            for i in 0..n {
                p1[i] = p[i] + dt * dp[i];
            }
        }
        rhs.eval(&u1, &p1, &mut du, &mut dp);
        for i in 0..n {
            u2[i] = 0.75 * u[i] + 0.25 * (u1[i] + dt * du[i]);
        }
        if relaxed {
            for i in 0..n {
                p2[i] = 0.75 * p[i] + 0.25 * (p1[i] + dt * dp[i]);
            }
        }
        rhs.eval(&u2, &p2, &mut du, &mut dp);
        for i in 0..n {
            u[i] = u[i] / 3.0 + 2.0 / 3.0 * (u2[i] + dt * du[i]);
        }
        if relaxed {
            for i in 0..n {
                p[i] = p[i] / 3.0 + 2.0 / 3.0 * (p2[i] + dt * dp[i]);
            }
        }

        t = if last { t_end } else { t + dt };
        steps += 1;
        since_snapshot += 1;

        let finite =
            u.iter().all(|v| v.is_finite()) && (!relaxed || p.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::BlowUp {
                step: steps,
                time: t,
            });
        }

        let due = since_snapshot >= options.snapshot_stride
            && options
                .snapshot_interval
                .is_none_or(|iv| t - last_snapshot_t >= iv);
        if due || last {
            snapshots.push(snapshot(&u, &p, t, &mut rhs)?);
            since_snapshot = 0;
            last_snapshot_t = t;
        }
    }

    let mut traj = Trajectory {
        snapshots,
        diagnostics: Vec::new(),
        params: *params,
        model: model.clone(),
        options: *options,
        grid: *grid,
        steps,
    };
    traj.diagnostics = diagnostics::standard_series(&traj);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(grid: &Grid1D, m: f64) -> Field {
        let l = grid.half_width();
        Field::from_fn(grid, 0.0, |x| (m * PI * x / l).sin()).unwrap()
    }

    #[test]
    fn zero_state_has_zero_rhs() {
        let g = Grid1D::new(1.0, 32).unwrap();
        let state = State::initial(&Field::zeros(&g, 0.0), &g).unwrap();
        let params = ParamSet::new(0.1, 0.01, 0.2, 0.3).unwrap();
        let (du, dp) = semidiscrete_rhs(&state, &params, &FluxModel::cubic(), &g).unwrap();
        assert!(du.values().iter().all(|&v| v == 0.0));
        assert!(dp.unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rusanov_rhs_on_riemann_step() {
        // u = 1 on x < 0, -1 on x >= 0: a shock at the centre and a
        // rarefaction jump at the seam. Interface fluxes: 1/2 away from
        // the jumps, 1/2 + 1 = 3/2 at the shock, 1/2 - 1 = -1/2 at the seam.
        let g = Grid1D::new(1.0, 16).unwrap();
        let u = Field::from_fn(&g, 0.0, |x| if x < 0.0 { 1.0 } else { -1.0 }).unwrap();
        let state = State::initial(&u, &g).unwrap();
        let (du, dp) =
            semidiscrete_rhs(&state, &ParamSet::zero(), &FluxModel::quadratic(), &g).unwrap();
        assert!(dp.is_none());
        let inv_dx = 1.0 / g.dx();
        for (i, &v) in du.values().iter().enumerate() {
            let expected = match i {
                7 => -inv_dx,
                8 => inv_dx,
                15 => inv_dx,
                0 => -inv_dx,
                _ => 0.0,
            };
            assert!((v - expected).abs() < 1e-12, "cell {i}: {v} vs {expected}");
        }
    }

    #[test]
    fn viscous_rhs_of_sine() {
        let zero_flux = FluxModel::custom("zero", |_| 0.0, |_| 0.0);
        let params = ParamSet::new(0.999, 0.0, 0.0, 0.0).unwrap();
        let mut errs = Vec::new();
        for n in [64, 128] {
            let g = Grid1D::new(1.0, n).unwrap();
            let state = State::initial(&sine(&g, 1.0), &g).unwrap();
            let (du, _) = semidiscrete_rhs(&state, &params, &zero_flux, &g).unwrap();
            let err = g
                .nodes()
                .zip(du.values())
                .map(|(x, v)| (v + 0.999 * PI * PI * (PI * x).sin()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] < 1e-2);
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn dispersive_stencil_is_third_derivative() {
        let zero_flux = FluxModel::custom("zero", |_| 0.0, |_| 0.0);
        let params = ParamSet::new(0.0, 0.5, 0.0, 0.0).unwrap();
        let g = Grid1D::new(1.0, 256).unwrap();
        let state = State::initial(&sine(&g, 1.0), &g).unwrap();
        let (du, _) = semidiscrete_rhs(&state, &params, &zero_flux, &g).unwrap();
        for (x, v) in g.nodes().zip(du.values()) {
            let exact = -0.5 * PI.powi(3) * (PI * x).cos();
            assert!((v - exact).abs() < 1e-3 * PI.powi(3));
        }
    }

    #[test]
    fn static_source_uses_primitive() {
        let zero_flux = FluxModel::custom("zero", |_| 0.0, |_| 0.0);
        let params = ParamSet::new(0.0, 0.0, 0.0, 0.5).unwrap();
        let g = Grid1D::new(1.0, 64).unwrap();
        let state = State::initial(&sine(&g, 1.0), &g).unwrap();
        let (du, _) = semidiscrete_rhs(&state, &params, &zero_flux, &g).unwrap();
        for (x, v) in g.nodes().zip(du.values()) {
            assert!((v + 0.5 * (PI * x).cos() / PI).abs() < 1e-13);
        }
    }

    #[test]
    fn stable_dt_cases() {
        let g = Grid1D::new(0.32, 64).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        let opts = SolverOptions::new(1.0);
        let u = Field::from_fn(&g, 0.0, |x| (PI * x / 0.32).sin()).unwrap();
        let state = State::initial(&u, &g).unwrap();
        let m = FluxModel::quadratic();

        let dt = stable_dt(&state, &ParamSet::zero(), &m, &g, &opts);
        assert!((dt - 0.004).abs() < 1e-12);

        let visc = ParamSet::new(0.01, 0.0, 0.0, 0.0).unwrap();
        let dt = stable_dt(&state, &visc, &m, &g, &opts);
        assert!((dt - 2.5e-3).abs() < 1e-12);

        let zero = State::initial(&Field::zeros(&g, 0.0), &g).unwrap();
        let dt = stable_dt(&zero, &ParamSet::zero(), &m, &g, &opts);
        assert!(dt.is_finite() && dt > 0.0);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid1D::new(1.0, 32).unwrap();
        let params = ParamSet::new(0.1, 0.001, 0.1, 0.2).unwrap();
        let traj = solve(
            &Field::zeros(&g, 0.0),
            &params,
            &FluxModel::quadratic(),
            &g,
            &SolverOptions::new(1.0),
        )
        .unwrap();
        assert_eq!(traj.final_time(), 1.0);
        assert!(traj.last().u.values().iter().all(|&v| v == 0.0));
        assert!(traj.last().p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_nonzero_mean() {
        let g = Grid1D::new(1.0, 32).unwrap();
        let u = Field::from_fn(&g, 0.0, |_| 0.5).unwrap();
        let r = solve(
            &u,
            &ParamSet::zero(),
            &FluxModel::quadratic(),
            &g,
            &SolverOptions::new(0.1),
        );
        assert!(matches!(r, Err(Error::MeanViolation { .. })));
    }

    #[test]
    fn max_steps_yields_partial_trajectory() {
        let g = Grid1D::new(1.0, 32).unwrap();
        let mut opts = SolverOptions::new(1.0);
        opts.max_steps = 3;
        match solve(
            &sine(&g, 2.0),
            &ParamSet::zero(),
            &FluxModel::quadratic(),
            &g,
            &opts,
        ) {
            Err(Error::IncompleteRun { partial }) => {
                assert_eq!(partial.steps, 3);
                assert!(partial.final_time() < 1.0);
            }
            other => panic!("expected incomplete run, got {other:?}"),
        }
    }

    #[test]
    fn unstable_courant_factor_blows_up() {
        // Without a flux there is no hyperbolic limit to shrink dt as u grows,
        // so dt = dx^2 / eps keeps the Nyquist mode at -4 on the real axis,
        // outside the RK3 stability interval.
        let g = Grid1D::new(1.0, 64).unwrap();
        let mut opts = SolverOptions::new(1.0);
        opts.cfl_visc = 1.0;
        let params = ParamSet::new(0.9, 0.0, 0.0, 0.0).unwrap();
        let flat = FluxModel::custom("zero", |_| 0.0, |_| 0.0);
        let seeded: Vec<f64> = (0..64)
            .map(|i| if i % 2 == 0 { 1e-3 } else { -1e-3 })
            .collect();
        let u0 = Field::new(seeded, 0.0).unwrap();
        let r = solve(&u0, &params, &flat, &g, &opts);
        assert!(
            matches!(r, Err(Error::BlowUp { .. })),
            "{:?}",
            r.map(|t| t.steps)
        );
    }

    #[test]
    fn no_sliver_final_step() {
        let g = Grid1D::new(1.0, 256).unwrap();
        let params = ParamSet::new(0.02, 0.0, 0.05, 0.01).unwrap();
        let traj = solve(
            &sine(&g, 2.0),
            &params,
            &FluxModel::quadratic(),
            &g,
            &SolverOptions::new(0.1),
        )
        .unwrap();
        let times = traj.times();
        let n = times.len();
        let (last, prev) = (times[n - 1] - times[n - 2], times[n - 2] - times[n - 3]);
        assert!(last > 0.5 * prev, "final step {last:e} vs {prev:e}");
    }

    #[test]
    fn snapshots_are_increasing_and_start_at_zero() {
        let g = Grid1D::new(1.0, 64).unwrap();
        let mut opts = SolverOptions::new(0.3);
        opts.snapshot_stride = 5;
        let traj = solve(
            &sine(&g, 2.0),
            &ParamSet::zero(),
            &FluxModel::quadratic(),
            &g,
            &opts,
        )
        .unwrap();
        let times = traj.times();
        assert_eq!(times[0], 0.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*times.last().unwrap(), 0.3);
    }
}
