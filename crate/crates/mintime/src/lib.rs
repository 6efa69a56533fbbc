//! Minimum-time optimal control and model predictive control on uniform
//! time grids with a free interval length.
//!
//! The horizon of the underlying optimal control problem is `t_f = N * dt`
//! where the grid size `N` is fixed per solve and the interval length `dt`
//! is an optimization parameter. The crate provides:
//!
//! * [`dynamics`] — continuous-time plant models, one-step integrators and
//!   linearization utilities,
//! * [`transcription`] — the two sparse nonlinear-program forms of the
//!   minimum-time problem (shared `dt` vs. per-interval `dt_k`) built as
//!   hypergraphs from which sparsity patterns are derived directly,
//! * [`solver`] — a sparse SQP method with an ADMM quadratic-program
//!   backend,
//! * [`controller`] — the closed loop with shrinking-horizon grid
//!   adaptation,
//! * [`dual_mode`] — LQR terminal controller design, region estimation and
//!   the composite control law,
//! * [`baselines`] — fixed-grid reference schemes (settling-time
//!   minimization and weighted l1-norm cost),
//! * [`harness`] — experiment configuration, metrics and benchmark sweeps
//!   backing the `mintime` command-line tool.

pub mod dynamics;
pub mod solver;
pub mod transcription;
pub mod error;

pub use error::{Error, Result};
