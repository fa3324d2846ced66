//! Vanishing-coefficient limits of a relaxed nonlocal conservation law.
//!
//! The library integrates
//!
//! ```text
//! u_t + f(u)_x = gamma P + eps u_xx + beta u_xxx,   -delta P_t + P_x = u
//! ```
//!
//! on a periodic grid, measures entropy residuals, a-priori bound constants
//! and distances to a reference entropy solution, and sweeps those measures
//! along geometric parameter sequences.

// `!(x > 0.0)` style checks are how NaN gets rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod nonlocal;
mod quadrature;
pub mod reference;
pub mod solver;

pub use error::{Error, Result};
pub use harness::{
    fit_rate, regime_sequence, run_sweep, Profile, RateFit, Regime, RegimeKind, SweepPlan,
};
pub use model::{
    make_entropy_pair, EntropyFamily, EntropyPair, Field, FluxKind, FluxModel, Grid1D, ParamSet,
};
pub use solver::{solve, Limiter, SolverOptions, State, Trajectory};
