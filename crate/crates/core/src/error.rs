use thiserror::Error;

use crate::solver::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid entropy pair: {0}")]
    InvalidEntropy(String),

    #[error(
        "input has nonzero mean {mean:e} (tolerance {tolerance:e}); the primitive is not periodic"
    )]
    MeanViolation { mean: f64, tolerance: f64 },

    #[error("relaxation requires delta > 0; use the static formulation for delta = 0")]
    DivisionGuard,

    #[error("fields live on different grids ({left} vs {right} cells)")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite value encountered at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("maximum principle violated at step {step}: {detail}")]
    MaximumPrinciple { step: usize, detail: String },

    #[error("run stopped after {} steps at t = {} before reaching t_end", .partial.steps, .partial.final_time())]
    IncompleteRun { partial: Box<Trajectory> },

    #[error("requested time {t} is not before the breaking time {t_star}")]
    PreShockViolation { t: f64, t_star: f64 },

    #[error("root finding did not converge: {0}")]
    RootFind(String),

    #[error("identity or bound not applicable: {0}")]
    Inapplicable(String),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("window [{lo}, {hi}) contains no grid nodes")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("regime parameter {name} = {value} leaves (0, 1) at k = {k}")]
    RegimeOverflow {
        k: usize,
        name: &'static str,
        value: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("every sweep cell failed")]
    SweepFailed,

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
