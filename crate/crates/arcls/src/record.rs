//! Run outcomes: terminal statuses, per-iteration traces, and the run record
//! consumed by the benchmarking harness.

use serde::{Deserialize, Serialize};

/// Lossless JSON shape for floats that may be non-finite: finite values stay
/// numbers, while NaN/±∞ become the tokens "NaN", "inf", "-inf". Plain JSON
/// serialization would silently turn them into null, which cannot be read
/// back into an f64.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FloatRepr {
    Num(f64),
    Token(String),
}

fn to_repr(v: f64) -> FloatRepr {
    if v.is_finite() {
        FloatRepr::Num(v)
    } else {
        let token = if v.is_nan() {
            "NaN"
        } else if v > 0.0 {
            "inf"
        } else {
            "-inf"
        };
        FloatRepr::Token(token.to_string())
    }
}

fn from_repr(r: FloatRepr) -> Result<f64, String> {
    match r {
        FloatRepr::Num(v) => Ok(v),
        FloatRepr::Token(t) => match t.as_str() {
            "NaN" => Ok(f64::NAN),
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(format!("unrecognized float token {other:?}")),
        },
    }
}

mod lossless_float {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        super::from_repr(super::FloatRepr::deserialize(d)?).map_err(de::Error::custom)
    }
}

mod lossless_float_opt {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(super::to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<super::FloatRepr>::deserialize(d)?
            .map(super::from_repr)
            .transpose()
            .map_err(de::Error::custom)
    }
}

mod lossless_float_vec {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| super::to_repr(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<super::FloatRepr>::deserialize(d)?
            .into_iter()
            .map(super::from_repr)
            .collect::<Result<_, _>>()
            .map_err(de::Error::custom)
    }
}

/// Terminal status of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Gradient norm reached the tolerance.
    Converged,
    /// Outer-iteration budget exhausted.
    IterationLimit,
    /// Objective fell below the divergence cutoff or became non-finite.
    Diverged,
    /// Configuration, evaluation, or internal failure; see `error`.
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterationLimit => "iteration_limit",
            Status::Diverged => "diverged",
            Status::Error => "error",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stepping regime produced an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Line-search step along the quasi-Newton ray under the iteration's
    /// scaled norm.
    Scaled,
    /// Classical Euclidean-norm iteration taken while the slope gate (or the
    /// inner solve) ruled the quasi-Newton ray out.
    FallbackL2,
    /// Iteration of one of the classical Euclidean-norm baselines.
    ClassicL2,
    /// Armijo backtracking iteration.
    LineSearch,
}

/// One outer iteration, recorded when tracing is enabled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Outer iteration index (0-based).
    pub k: usize,
    pub mode: StepMode,
    /// Control parameter the iteration ran with (before its end-of-iteration
    /// update): σ for cubic regularization, Δ for trust region, the accepted
    /// step factor for the Armijo baseline.
    #[serde(with = "lossless_float")]
    pub control: f64,
    /// Accepted step length along the search ray (δ, α, or the Armijo step);
    /// 0 when the iteration was unsuccessful.
    #[serde(with = "lossless_float")]
    pub step_len: f64,
    /// Decrease ratio of the last trial.
    #[serde(with = "lossless_float")]
    pub rho: f64,
    /// Unsuccessful trials inside this iteration (0 for baselines, which
    /// count every trial as its own iteration).
    pub backtracks: usize,
    pub accepted: bool,
    /// Objective and gradient norm after the iteration.
    #[serde(with = "lossless_float")]
    pub f: f64,
    #[serde(with = "lossless_float")]
    pub gnorm: f64,
    /// Inner-solver matrix–vector products consumed by this iteration.
    pub matvecs: u64,
    /// Matrix–vector products spent after the trial loop started; stays 0
    /// for the scaled solvers, whose backtracking only rescales the step.
    pub trial_matvecs: u64,
    /// Search direction used this iteration (quasi-Newton direction in
    /// scaled mode, the subproblem step for baselines). Only stored when
    /// tracing is on.
    #[serde(with = "lossless_float_vec")]
    pub direction: Vec<f64>,
    /// Accepted step vector (empty when the iteration was unsuccessful).
    #[serde(with = "lossless_float_vec")]
    pub step: Vec<f64>,
    /// Trust-region boundary multiplier diagnostic, when the accepted step
    /// lay on the boundary.
    #[serde(
        default,
        with = "lossless_float_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub lambda_boundary: Option<f64>,
    /// Set when the printed Cauchy-step formula disagreed with the 1-D
    /// minimization oracle and the oracle's value was used instead.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cauchy_overridden: bool,
}

/// Evaluation counters for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub f_evals: u64,
    pub g_evals: u64,
    pub hvp_evals: u64,
    /// Hessian–vector products consumed inside inner (subproblem/linear)
    /// solvers; a subset of `hvp_evals`.
    pub inner_matvecs: u64,
}

/// Outcome of one (problem, solver) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub solver: String,
    pub n: usize,
    pub status: Status,
    pub outer_iters: usize,
    pub f_evals: u64,
    pub g_evals: u64,
    pub hvp_evals: u64,
    pub inner_matvecs: u64,
    /// Last finite objective value seen.
    #[serde(with = "lossless_float")]
    pub final_f: f64,
    /// Gradient norm at the final iterate.
    #[serde(with = "lossless_float")]
    pub final_gnorm: f64,
    pub wall_time_ms: f64,
    /// Human-readable failure detail for `status == error`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Per-iteration trace; present only when tracing was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<IterationTrace>>,
}

impl RunRecord {
    /// The run finished with the gradient tolerance met.
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}
