//! Shared domain types: the periodic mesh, grid fields, flux models,
//! entropy pairs and the four small regularization parameters.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Uniform periodic mesh on `[-L, L)` with nodes `x_i = -L + i dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(half_width: f64, n_cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n_cells < 8 || !n_cells.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "cell count must be even and at least 8, got {n_cells}"
            )));
        }
        let dx = 2.0 * half_width / n_cells as f64;
        if !(2.0 * half_width).is_finite() || !dx.is_normal() {
            return Err(Error::InvalidGrid(format!(
                "spacing 2L/N is not representable for L = {half_width}, N = {n_cells}"
            )));
        }
        Ok(Self {
            half_width,
            n_cells,
            dx,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Period `2L`.
    pub fn length(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.x(i))
    }

    /// Same domain with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let n = self.n_cells.checked_mul(factor.max(1)).ok_or_else(|| {
            Error::InvalidGrid(format!("{} x {factor} cells overflows", self.n_cells))
        })?;
        Self::new(self.half_width, n)
    }
}

/// Grid samples of `u` or `P` at a single time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(values: Vec<f64>, time: f64) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values, time })
    }

    pub fn zeros(grid: &Grid1D, time: f64) -> Self {
        Self {
            values: vec![0.0; grid.n_cells()],
            time,
        }
    }

    pub fn from_fn(grid: &Grid1D, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.nodes().map(f).collect(), time)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if self.values.len() != grid.n_cells() {
            return Err(Error::GridMismatch {
                left: self.values.len(),
                right: grid.n_cells(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxKind {
    Quadratic,
    Cubic,
    Custom,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Flux `f` of the conservation law together with its derivative.
#[derive(Clone)]
pub struct FluxModel {
    kind: FluxKind,
    custom: Option<(ScalarFn, ScalarFn)>,
    description: String,
}

impl FluxModel {
    /// `f(u) = u^2 / 2`.
    pub fn quadratic() -> Self {
        Self {
            kind: FluxKind::Quadratic,
            custom: None,
            description: "f(u) = u^2/2".into(),
        }
    }

    /// `f(u) = -u^3 / 6`.
    pub fn cubic() -> Self {
        Self {
            kind: FluxKind::Cubic,
            custom: None,
            description: "f(u) = -u^3/6".into(),
        }
    }

    /// A caller-certified smooth flux. Growth is not validated.
    pub fn custom(
        description: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: FluxKind::Custom,
            custom: Some((Arc::new(f), Arc::new(df))),
            description: description.into(),
        }
    }

    pub fn from_kind(kind: FluxKind) -> Result<Self> {
        match kind {
            FluxKind::Quadratic => Ok(Self::quadratic()),
            FluxKind::Cubic => Ok(Self::cubic()),
            FluxKind::Custom => Err(Error::config(
                "model.kind",
                "custom fluxes can only be constructed in code",
            )),
        }
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Quadratic => 0.5 * u * u,
            FluxKind::Cubic => -u * u * u / 6.0,
            FluxKind::Custom => (self.custom.as_ref().unwrap().0)(u),
        }
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Quadratic => u,
            FluxKind::Cubic => -0.5 * u * u,
            FluxKind::Custom => (self.custom.as_ref().unwrap().1)(u),
        }
    }

    /// `f''(u)`; central difference of `f'` for custom fluxes.
    pub fn second_deriv(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Quadratic => 1.0,
            FluxKind::Cubic => -u,
            FluxKind::Custom => {
                let h = 1e-5 * (1.0 + u.abs());
                (self.deriv(u + h) - self.deriv(u - h)) / (2.0 * h)
            }
        }
    }

    /// Largest `|f'|` over the closed interval between `a` and `b`.
    ///
    /// Exact for the built-in fluxes, whose `|f'|` is convex; endpoint
    /// maximum for custom ones.
    #[inline]
    pub fn max_speed(&self, a: f64, b: f64) -> f64 {
        self.deriv(a).abs().max(self.deriv(b).abs())
    }
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxModel")
            .field("kind", &self.kind)
            .field("description", &self.description)
            .finish()
    }
}

pub fn eval_flux(model: &FluxModel, u: f64) -> f64 {
    model.eval(u)
}

/// Viscosity `eps`, dispersion `beta`, relaxation `delta` and rotation `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub eps: f64,
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl ParamSet {
    pub fn new(eps: f64, beta: f64, delta: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            eps,
            beta,
            delta,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zero() -> Self {
        Self {
            eps: 0.0,
            beta: 0.0,
            delta: 0.0,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps", self.eps),
            ("beta", self.beta),
            ("delta", self.delta),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {v} is outside [0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// `delta > 0`: `P` carries its own evolution equation.
    pub fn is_relaxed(&self) -> bool {
        self.delta > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EntropyFamily {
    /// `eta(u) = u^2 / 2`.
    Square,
    /// `eta(u) = sqrt((u - k)^2 + kappa^2) - kappa`, a C^2 stand-in for `|u - k|`.
    SmoothedKruzkov { k: f64, kappa: f64 },
}

/// Convex entropy with the flux `q` determined by `q' = f' eta'`, `q(0) = 0`.
#[derive(Debug, Clone)]
pub struct EntropyPair {
    family: EntropyFamily,
    flux: FluxModel,
}

const Q_TOLERANCE: f64 = 1e-13;

impl EntropyPair {
    pub fn family(&self) -> EntropyFamily {
        self.family
    }

    pub fn eta(&self, u: f64) -> f64 {
        match self.family {
            EntropyFamily::Square => 0.5 * u * u,
            EntropyFamily::SmoothedKruzkov { k, kappa } => (u - k).hypot(kappa) - kappa,
        }
    }

    pub fn deta(&self, u: f64) -> f64 {
        match self.family {
            EntropyFamily::Square => u,
            EntropyFamily::SmoothedKruzkov { k, kappa } => (u - k) / (u - k).hypot(kappa),
        }
    }

    pub fn d2eta(&self, u: f64) -> f64 {
        match self.family {
            EntropyFamily::Square => 1.0,
            EntropyFamily::SmoothedKruzkov { k, kappa } => {
                let r = (u - k).hypot(kappa);
                kappa * kappa / (r * r * r)
            }
        }
    }

    /// Entropy flux, integrated from the reference state 0.
    pub fn q(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let tol = Q_TOLERANCE * (1.0 + u.abs()).powi(4);
        let mut extra_breaks = Vec::new();
        if let EntropyFamily::SmoothedKruzkov { k, .. } = self.family {
            // Resolve the steep part of eta' explicitly.
            if (k > 0.0 && k < u) || (k < 0.0 && k > u) {
                extra_breaks.push(k);
            }
        }
        let integrand = |xi: f64| self.flux.deriv(xi) * self.deta(xi);
        let mut total = 0.0;
        let mut a = 0.0;
        for b in extra_breaks.into_iter().chain(std::iter::once(u)) {
            total += adaptive_simpson(&integrand, a, b, tol);
            a = b;
        }
        total
    }
}

pub fn make_entropy_pair(model: &FluxModel, family: EntropyFamily) -> Result<EntropyPair> {
    if let EntropyFamily::SmoothedKruzkov { k, kappa } = family {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidEntropy(format!(
                "smoothing width must be positive, got {kappa}"
            )));
        }
        if !k.is_finite() {
            return Err(Error::InvalidEntropy(format!(
                "Kruzkov level must be finite, got {k}"
            )));
        }
    }
    Ok(EntropyPair {
        family,
        flux: model.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_arithmetic() {
        let g = Grid1D::new(1.0, 8).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(7), 0.75);

        let g = Grid1D::new(std::f64::consts::PI, 256).unwrap();
        assert_relative_eq!(g.dx(), 2.0 * std::f64::consts::PI / 256.0);
        assert!((g.dx() * 256.0 - g.length()).abs() <= f64::EPSILON * g.length());
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(matches!(Grid1D::new(1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid1D::new(1.0, 6), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid1D::new(0.0, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid1D::new(-1.0, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            Grid1D::new(f64::NAN, 8),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn field_rejects_non_finite() {
        assert!(Field::new(vec![0.0, f64::NAN], 0.0).is_err());
        assert!(Field::new(vec![f64::INFINITY], 0.0).is_err());
    }

    #[test]
    fn flux_values() {
        assert_eq!(eval_flux(&FluxModel::quadratic(), 2.0), 2.0);
        assert_relative_eq!(eval_flux(&FluxModel::cubic(), 2.0), -4.0 / 3.0);
        assert_eq!(eval_flux(&FluxModel::quadratic(), 0.0), 0.0);
        assert_eq!(eval_flux(&FluxModel::cubic(), 0.0), 0.0);
        assert_eq!(FluxModel::quadratic().deriv(-3.0), -3.0);
        assert_eq!(FluxModel::cubic().deriv(2.0), -2.0);
    }

    #[test]
    fn params_range() {
        assert!(ParamSet::new(0.1, 0.0, 0.0, 0.5).is_ok());
        assert!(ParamSet::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ParamSet::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(!ParamSet::zero().is_relaxed());
    }

    #[test]
    fn square_entropy_flux_quadratic() {
        let pair = make_entropy_pair(&FluxModel::quadratic(), EntropyFamily::Square).unwrap();
        for u in [-2.5, -1.0, 0.3, 1.7] {
            // q(u) = integral_0^u xi * xi
            assert_relative_eq!(pair.q(u), u * u * u / 3.0, max_relative = 1e-12);
        }
        assert_eq!(pair.q(0.0), 0.0);
    }

    #[test]
    fn square_entropy_flux_cubic() {
        let pair = make_entropy_pair(&FluxModel::cubic(), EntropyFamily::Square).unwrap();
        for u in [-2.0, 0.5, 1.5] {
            assert_relative_eq!(pair.q(u), -u.powi(4) / 8.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn smoothed_kruzkov_approaches_kruzkov_flux() {
        let kappa = 1e-6;
        let pair = make_entropy_pair(
            &FluxModel::quadratic(),
            EntropyFamily::SmoothedKruzkov { k: 0.0, kappa },
        )
        .unwrap();
        for u in [-2.0_f64, -0.5, 0.25, 1.0, 3.0] {
            let kruzkov = u.signum() * u * u / 2.0;
            assert!((pair.q(u) - kruzkov).abs() < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn kruzkov_with_offset_level() {
        let (k, kappa) = (0.5, 1e-3);
        let pair = make_entropy_pair(
            &FluxModel::quadratic(),
            EntropyFamily::SmoothedKruzkov { k, kappa },
        )
        .unwrap();
        // For kappa -> 0: q(u) = sign(u - k)(f(u) - f(k)) + f(k) for u > k > 0.
        let u = 2.0;
        let kruzkov = 0.5 * u * u - 2.0 * 0.5 * k * k;
        assert!((pair.q(u) - kruzkov).abs() < 5e-3);
    }

    #[test]
    fn rejects_nonpositive_smoothing() {
        let m = FluxModel::quadratic();
        for kappa in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                make_entropy_pair(&m, EntropyFamily::SmoothedKruzkov { k: 0.0, kappa }),
                Err(Error::InvalidEntropy(_))
            ));
        }
    }
}
