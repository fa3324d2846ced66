//! JSON run configurations for single solves and regime sweeps.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::Window;
use crate::error::{Error, Result};
use crate::harness::{regime_sequence, Profile, Regime, SweepPlan};
use crate::model::{FluxKind, FluxModel, Grid1D, ParamSet};
use crate::solver::{Limiter, SolverOptions};

/// Largest accepted `grid.N`.
pub const MAX_CELLS: usize = 1 << 22;
/// Largest accepted `reference.refine`.
pub const MAX_REFINE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_cells: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D> {
        if self.n_cells > MAX_CELLS {
            return Err(Error::config(
                "grid.N",
                format!("at most {MAX_CELLS} cells supported"),
            ));
        }
        if self.n_cells < 8 || !self.n_cells.is_multiple_of(2) {
            return Err(Error::config(
                "grid.N",
                format!("must be even and at least 8, got {}", self.n_cells),
            ));
        }
        Grid1D::new(self.half_width, self.n_cells)
            .map_err(|e| Error::config("grid.L", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: FluxKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    pub t_end: f64,
    #[serde(default)]
    pub cfl_hyp: Option<f64>,
    #[serde(default)]
    pub cfl_visc: Option<f64>,
    #[serde(default)]
    pub cfl_disp: Option<f64>,
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
    #[serde(default)]
    pub limiter: Option<Limiter>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

impl OptionsConfig {
    pub fn build(&self) -> Result<SolverOptions> {
        let d = SolverOptions::new(self.t_end);
        let opts = SolverOptions {
            cfl_hyp: self.cfl_hyp.unwrap_or(d.cfl_hyp),
            cfl_visc: self.cfl_visc.unwrap_or(d.cfl_visc),
            cfl_disp: self.cfl_disp.unwrap_or(d.cfl_disp),
            t_end: self.t_end,
            snapshot_stride: self.snapshot_stride.unwrap_or(d.snapshot_stride),
            snapshot_interval: self.snapshot_interval,
            limiter: self.limiter.unwrap_or(d.limiter),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub refine: usize,
}

/// `{params, grid, model, init, options}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub params: ParamSet,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub init: Profile,
    pub options: OptionsConfig,
}

/// Validated single-run setup.
#[derive(Debug, Clone)]
pub struct SolveSetup {
    pub params: ParamSet,
    pub grid: Grid1D,
    pub model: FluxModel,
    pub profile: Profile,
    pub options: SolverOptions,
}

impl SolveConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<SolveSetup> {
        let grid = self.grid.build()?;
        self.params
            .validate()
            .map_err(|e| Error::config("params", e.to_string()))?;
        let model = FluxModel::from_kind(self.model.kind)?;
        self.init.validate(&grid)?;
        let options = self.options.build()?;
        Ok(SolveSetup {
            params: self.params,
            grid,
            model,
            profile: self.init.clone(),
            options,
        })
    }
}

/// `{regime, grid, model, init, options, reference, window, norms}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub regime: Regime,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub init: Profile,
    pub options: OptionsConfig,
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default)]
    pub norms: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<SweepPlan> {
        regime_sequence(&self.regime)?;
        let grid = self.grid.build()?;
        let model = FluxModel::from_kind(self.model.kind)?;
        self.init.validate(&grid)?;
        let options = self.options.build()?;
        if self.reference.refine == 0 || self.reference.refine > MAX_REFINE {
            return Err(Error::config(
                "reference.refine",
                format!("must lie in [1, {MAX_REFINE}]"),
            ));
        }
        let mut plan = SweepPlan::new(
            self.regime,
            self.init.clone(),
            model,
            grid,
            options,
            self.reference.refine,
        );
        if let Some(w) = self.window {
            let l = grid.half_width();
            if !(w.lo < w.hi && w.lo >= -l && w.hi <= l) {
                return Err(Error::config(
                    "window",
                    format!(
                        "[{}, {}) must be a nonempty subset of [{}, {})",
                        w.lo, w.hi, -l, l
                    ),
                ));
            }
            plan.window = w;
        }
        if let Some(norms) = &self.norms {
            if norms.is_empty() || norms.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
                return Err(Error::config("norms", "each norm must be a finite p >= 1"));
            }
            plan.norms = norms.clone();
        }
        Ok(plan)
    }
}

/// Stable 16-hex-digit digest of a JSON document (key order insensitive).
pub fn config_hash(text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let canonical = serde_json::to_string(&value)?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(hex::encode(digest)[..16].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVE: &str = r#"{
        "params": {"eps": 0.05, "beta": 0.0, "delta": 0.0, "gamma": 0.1},
        "grid": {"L": 1.0, "N": 64},
        "model": {"kind": "Quadratic"},
        "init": {"profile": "sine_modes", "modes": [[2, 1.0]]},
        "options": {"t_end": 0.1}
    }"#;

    #[test]
    fn parses_solve_config() {
        let setup = SolveConfig::parse(SOLVE).unwrap().validate().unwrap();
        assert_eq!(setup.grid.n_cells(), 64);
        assert!(!setup.params.is_relaxed());
        assert_eq!(setup.options.cfl_hyp, 0.4);
    }

    #[test]
    fn odd_grid_names_field() {
        let text = SOLVE.replace("\"N\": 64", "\"N\": 63");
        match SolveConfig::parse(&text).unwrap().validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grid.N"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = SOLVE.replace("\"t_end\"", "\"t_stop\": 1, \"t_end\"");
        assert!(matches!(SolveConfig::parse(&text), Err(Error::Json(_))));
    }

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a = config_hash(r#"{"a": 1, "b": [1, 2]}"#).unwrap();
        let b = config_hash(r#"{"b":[1,2],"a":1}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
    }
}
