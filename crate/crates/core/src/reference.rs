//! Entropy-solution oracles for the limit conservation laws
//! `u_t + f(u)_x = 0` with `f = u^2/2` or `f = -u^3/6`.

use crate::error::{Error, Result};
use crate::model::{Field, FluxModel, Grid1D};
use crate::nonlocal::check_zero_mean;

const GODUNOV_CFL: f64 = 0.4;

/// First-order monotone finite-volume solution at time `t_end`.
///
/// Runs local Lax-Friedrichs with forward Euler on a grid `refine` times
/// finer than `grid`. The input is prolonged by periodic linear
/// interpolation (mean and bounds preserving) and the result restricted
/// by cell averaging.
pub fn godunov_solve(
    u0: &Field,
    model: &FluxModel,
    grid: &Grid1D,
    t_end: f64,
    refine: usize,
) -> Result<Field> {
    u0.check_grid(grid)?;
    check_zero_mean(u0.values(), grid)?;
    monotone_solve(u0, model, grid, t_end, refine)
}

/// Same scheme as [`godunov_solve`] without the zero-mean precondition, for
/// plain periodic conservation-law data such as one-sided Riemann steps.
pub fn monotone_solve(
    u0: &Field,
    model: &FluxModel,
    grid: &Grid1D,
    t_end: f64,
    refine: usize,
) -> Result<Field> {
    u0.check_grid(grid)?;
    if refine == 0 {
        return Err(Error::InvalidParams("refine must be at least 1".into()));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "t_end must be nonnegative, got {t_end}"
        )));
    }
    let fine = grid.refined(refine)?;
    let mut u = prolong(u0.values(), refine);
    let n = u.len();
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));

    let dx = fine.dx();
    let mut flux = vec![0.0; n];
    let mut t = 0.0;
    let mut step = 0usize;
    while t < t_end {
        let speed = u
            .iter()
            .fold(0.0_f64, |m, &v| m.max(model.deriv(v).abs()))
            .max(1e-12);
        let mut dt = GODUNOV_CFL * dx / speed;
        let last = t + dt >= t_end;
        if last {
            dt = t_end - t;
        }
        for i in 0..n {
            let (ul, ur) = (u[i], u[(i + 1) % n]);
            flux[i] =
                0.5 * (model.eval(ul) + model.eval(ur)) - 0.5 * model.max_speed(ul, ur) * (ur - ul);
        }
        let r = dt / dx;
        let mut prev = flux[n - 1];
        for i in 0..n {
            u[i] -= r * (flux[i] - prev);
            prev = flux[i];
        }
        t = if last { t_end } else { t + dt };
        step += 1;
        for &v in &u {
            if !v.is_finite() {
                return Err(Error::BlowUp { step, time: t });
            }
            if v < lo - slack || v > hi + slack {
                return Err(Error::MaximumPrinciple {
                    step,
                    detail: format!("value {v} outside initial range [{lo}, {hi}]"),
                });
            }
        }
    }
    Field::new(restrict(&u, refine), t_end)
}

fn prolong(coarse: &[f64], refine: usize) -> Vec<f64> {
    if refine == 1 {
        return coarse.to_vec();
    }
    let n = coarse.len();
    let mut out = Vec::with_capacity(n * refine);
    for i in 0..n {
        for j in 0..refine {
            let s = (j as f64 + 0.5) / refine as f64 - 0.5;
            let v = if s >= 0.0 {
                (1.0 - s) * coarse[i] + s * coarse[(i + 1) % n]
            } else {
                (1.0 + s) * coarse[i] - s * coarse[(i + n - 1) % n]
            };
            out.push(v);
        }
    }
    out
}

fn restrict(fine: &[f64], refine: usize) -> Vec<f64> {
    fine.chunks(refine)
        .map(|c| c.iter().sum::<f64>() / refine as f64)
        .collect()
}

/// Self-similar entropy solution `u(x/t)` of the Burgers Riemann problem.
pub fn exact_riemann_burgers(u_left: f64, u_right: f64, xi: f64) -> f64 {
    if u_left > u_right {
        if xi < 0.5 * (u_left + u_right) {
            u_left
        } else {
            u_right
        }
    } else if u_left < u_right {
        xi.clamp(u_left, u_right)
    } else {
        u_left
    }
}

/// A smooth periodic initial profile.
pub trait SmoothProfile {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    /// Spatial period (the scan range for extrema).
    fn period(&self) -> f64;
}

/// Profile built from closures.
pub struct FnProfile<F, D> {
    pub value: F,
    pub slope: D,
    pub period: f64,
}

impl<F: Fn(f64) -> f64, D: Fn(f64) -> f64> SmoothProfile for FnProfile<F, D> {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn slope(&self, x: f64) -> f64 {
        (self.slope)(x)
    }
    fn period(&self) -> f64 {
        self.period
    }
}

const SCAN_POINTS: usize = 4096;

/// Gradient catastrophe time `t* = -1 / min_x (f'(u0(x)))_x`; infinite when
/// characteristics never cross.
pub fn breaking_time(profile: &dyn SmoothProfile, model: &FluxModel) -> f64 {
    let steepening = |x: f64| model.second_deriv(profile.value(x)) * profile.slope(x);
    let period = profile.period();
    let h = period / SCAN_POINTS as f64;
    let (best, _) = (0..SCAN_POINTS)
        .map(|i| {
            let x = -0.5 * period + i as f64 * h;
            (x, steepening(x))
        })
        .fold(
            (0.0, f64::INFINITY),
            |acc, (x, v)| if v < acc.1 { (x, v) } else { acc },
        );
    // Golden-section polish on the bracketing cells.
    let (mut a, mut b) = (best - h, best + h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if steepening(c) < steepening(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let min = steepening(0.5 * (a + b)).min(steepening(best));
    if min < 0.0 {
        -1.0 / min
    } else {
        f64::INFINITY
    }
}

/// Smooth solution by characteristics: solves `u = u0(x - f'(u) t)`.
pub fn characteristics_smooth(
    profile: &dyn SmoothProfile,
    model: &FluxModel,
    x: f64,
    t: f64,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(profile.value(x));
    }
    let t_star = breaking_time(profile, model);
    if !(t < t_star) || t < 0.0 {
        return Err(Error::PreShockViolation { t, t_star });
    }
    let period = profile.period();
    let (lo, hi) = (0..SCAN_POINTS)
        .map(|i| profile.value(-0.5 * period + i as f64 * period / SCAN_POINTS as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    let pad = 1e-3 * (1.0 + hi - lo);
    let (mut a, mut b) = (lo - pad, hi + pad);

    // g is increasing for t < t*, so the root is unique.
    let g = |u: f64| u - profile.value(x - model.deriv(u) * t);
    let dg = |u: f64| 1.0 + t * model.second_deriv(u) * profile.slope(x - model.deriv(u) * t);
    let tol = 1e-12;
    let mut u = profile
        .value(x - model.deriv(profile.value(x)) * t)
        .clamp(a, b);
    for _ in 0..200 {
        let r = g(u);
        if r.abs() <= tol {
            return Ok(u);
        }
        if r < 0.0 {
            a = u;
        } else {
            b = u;
        }
        let slope = dg(u);
        let newton = u - r / slope;
        u = if slope > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if b - a < f64::EPSILON * (1.0 + u.abs()) {
            break;
        }
    }
    let r = g(u);
    if r.abs() <= tol {
        Ok(u)
    } else {
        Err(Error::RootFind(format!(
            "residual {r:e} at x = {x}, t = {t} after bracketing to [{a}, {b}]"
        )))
    }
}
