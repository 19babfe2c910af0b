//! Shared solver configuration and its validation.
//!
//! One configuration struct drives every solver in the crate so that
//! benchmark runs are comparable: the acceptance threshold, the
//! regularizer/radius update factors, the inner (Krylov) tolerances and the
//! slope gate are all in one place. `SolverConfig::default()` reproduces the
//! reference parameter set used throughout the test suites.

use thiserror::Error;

/// How the classical cubic-regularization baseline solves its subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicMode {
    /// Eigendecompose the dense Hessian and solve the secular equation.
    /// Exact (up to the scalar root-finder tolerance); requires n ≤ the
    /// dense threshold.
    DenseExact,
    /// Tridiagonalize with a Lanczos process and solve the reduced problem
    /// exactly; matrix-free, expands the subspace until the model-gradient
    /// residual is small.
    Lanczos,
}

/// How the classical trust-region baseline solves its subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrMode {
    /// Eigendecomposition + secular equation on the boundary multiplier
    /// (Moré–Sorensen style). Exact; requires n ≤ the dense threshold.
    DenseExact,
    /// Steihaug–Toint truncated conjugate gradient: stops at the boundary or
    /// on negative curvature; matrix-free.
    Steihaug,
}

/// Parameters shared by all outer solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Stop when the gradient norm falls to or below this value.
    pub gtol: f64,
    /// Outer-iteration budget.
    pub max_iter: usize,
    /// Acceptance threshold η for the decrease ratio ρ.
    pub eta: f64,
    /// Initial cubic regularizer σ₀.
    pub sigma0: f64,
    /// Floor for the regularizer after successful iterations.
    pub sigma_min: f64,
    /// Regularizer shrink factor on success (σ ← max(ν₁σ, σ_min)), ν₁ ∈ (0,1].
    pub nu1: f64,
    /// Regularizer growth factor on failure (σ ← ν₂σ), ν₂ > 1.
    pub nu2: f64,
    /// Initial trust-region radius Δ₀.
    pub delta0: f64,
    /// Cap for the trust-region radius.
    pub delta_max: f64,
    /// Radius shrink factor on failure, 0 ≤ τ₁ < 1.
    pub tau1: f64,
    /// Radius growth factor on success, τ₂ ≥ 1.
    pub tau2: f64,
    /// Armijo backtracking contraction factor, in (0,1).
    pub armijo_tau: f64,
    /// Slope gate: the quasi-Newton direction is usable when
    /// |gᵀs| ≥ ε_d·‖g‖·‖s‖.
    pub eps_d: f64,
    /// Relative residual tolerance for the inner Krylov solve.
    pub inner_rtol: f64,
    /// Inner iteration cap; `None` means 2·n.
    pub max_inner: Option<usize>,
    /// Factor ζ in the residual gate of the second-order variant:
    /// ‖Bs+g‖ ≤ ζ·|δ|·‖s‖².
    pub zeta: f64,
    /// Clamp bounds for the norm-scaling parameter β.
    pub beta_min: f64,
    pub beta_max: f64,
    /// Cap on unsuccessful trials within one outer iteration.
    pub max_backtracks: usize,
    /// Largest n for which dense subproblem modes may materialize the Hessian.
    pub dense_threshold: usize,
    /// Subproblem engine for the cubic baseline (also the fallback engine of
    /// the line-search cubic solver).
    pub cubic_mode: CubicMode,
    /// Subproblem engine for the trust-region baseline (also the fallback
    /// engine of the line-search trust-region solver).
    pub tr_mode: TrMode,
    /// Record per-iteration traces in the run record.
    pub keep_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gtol: 1e-5,
            max_iter: 10_000,
            eta: 0.1,
            sigma0: 1.0,
            sigma_min: 1e-16,
            nu1: 0.5,
            nu2: 2.0,
            delta0: 1.0,
            delta_max: 1e16,
            tau1: 0.5,
            tau2: 2.0,
            armijo_tau: 0.5,
            eps_d: 1e-3,
            inner_rtol: 1e-4,
            max_inner: None,
            zeta: 1.0,
            beta_min: 1e-12,
            beta_max: 1e12,
            max_backtracks: 100,
            dense_threshold: 200,
            cubic_mode: CubicMode::Lanczos,
            tr_mode: TrMode::Steihaug,
            keep_trace: false,
        }
    }
}

/// An invalid configuration (or an invalid problem request).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown problem family `{0}` (known: {1})")]
    UnknownProblem(String, String),
    #[error("problem `{name}` does not support n = {n}: {reason}")]
    BadDimension {
        name: String,
        n: usize,
        reason: String,
    },
}

impl SolverConfig {
    /// Check every parameter range. Solvers call this before running and
    /// surface the error as a terminal `error` status.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.gtol > 0.0) {
            return fail("gtol must be positive");
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return fail("eta must lie in (0,1)");
        }
        if !(self.sigma_min > 0.0 && self.sigma0 >= self.sigma_min) {
            return fail("need sigma0 >= sigma_min > 0");
        }
        if !(self.nu1 > 0.0 && self.nu1 <= 1.0) {
            return fail("nu1 must lie in (0,1]");
        }
        if !(self.nu2 > 1.0) {
            return fail("nu2 must exceed 1");
        }
        if !(self.delta0 > 0.0 && self.delta_max > self.delta0) {
            return fail("need delta_max > delta0 > 0");
        }
        if !(self.tau1 >= 0.0 && self.tau1 < 1.0 && self.tau2 >= 1.0) {
            return fail("need 0 <= tau1 < 1 <= tau2");
        }
        if !(self.armijo_tau > 0.0 && self.armijo_tau < 1.0) {
            return fail("armijo_tau must lie in (0,1)");
        }
        if !(self.eps_d > 0.0 && self.eps_d < 1.0) {
            return fail("eps_d must lie in (0,1)");
        }
        if !(self.inner_rtol > 0.0 && self.inner_rtol < 1.0) {
            return fail("inner_rtol must lie in (0,1)");
        }
        if !(self.zeta > 0.0) {
            return fail("zeta must be positive");
        }
        if !(self.beta_min > 0.0 && self.beta_max > self.beta_min) {
            return fail("need beta_max > beta_min > 0");
        }
        if self.max_backtracks == 0 {
            return fail("max_backtracks must be at least 1");
        }
        if self.dense_threshold == 0 {
            return fail("dense_threshold must be at least 1");
        }
        Ok(())
    }

    /// Inner iteration cap for a problem of dimension `n`.
    pub fn inner_cap(&self, n: usize) -> usize {
        self.max_inner.unwrap_or(2 * n).max(1)
    }
}
