//! Line-search formulations of adaptive cubic-regularization and
//! trust-region methods, classical baselines, and a benchmarking harness.
//!
//! The central idea: when the quasi-Newton direction found by an inner
//! Krylov solver is a descent direction, the cubic-regularized (or
//! trust-region) subproblem in a suitable iteration-dependent scaled norm
//! collapses to a one-dimensional problem along that direction, with a
//! closed-form step length. Each outer iteration then costs one inner solve
//! plus a cheap backtracking-style loop, with no additional matrix–vector
//! products.
//!
//! Modules:
//! - [`config`]: solver parameters and validation
//! - [`record`]: run records, iteration traces, evaluation counters
//! - [`problems`]: test objectives with analytic derivatives
//! - [`driver`]: shared outer-loop state, stopping tests, and run records
//! - [`check`]: finite-difference and grid-search verification oracles
//! - [`krylov`]: MINRES inner solver and a dense direct fallback
//! - [`scaled_norm`]: direction geometry, the scaled-norm weight policy, and
//!   the explicit scaled-norm construction
//! - [`ls_arc`]: line-search cubic-regularization solvers
//! - [`ls_tr`]: line-search trust-region solver
//! - [`baselines`]: classical cubic-regularization / trust-region /
//!   backtracking solvers and their subproblem engines
//! - [`harness`]: benchmark orchestration and performance profiles
//! - [`cli`]: command-line interface

pub mod baselines;
pub mod check;
pub mod cli;
pub mod config;
pub mod driver;
pub mod harness;
pub mod krylov;
pub mod ls_arc;
pub mod ls_tr;
pub mod problems;
pub mod record;
pub mod scaled_norm;

pub use config::{ConfigError, CubicMode, SolverConfig, TrMode};
pub use problems::{make_problem, Matrix, ObjectiveFn, Problem, Vector, FAMILIES};
pub use record::{EvalCounters, IterationTrace, RunRecord, Status, StepMode};
