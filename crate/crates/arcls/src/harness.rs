//! Benchmark orchestration: the (problem × solver) run matrix, Dolan–Moré
//! performance profiles, and CSV/JSON export of records and curves.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::baselines::{arc_l2_solve, armijo_solve, tr_l2_solve};
use crate::config::{ConfigError, SolverConfig};
use crate::ls_arc::{lsarc_solve, Variant};
use crate::ls_tr::lstr_solve;
use crate::problems::{make_problem, Problem, FAMILIES};
use crate::record::{RunRecord, Status};

/// Exact header of the run-record CSV.
pub const RECORD_CSV_HEADER: &str = "problem,solver,n,status,outer_iters,f_evals,g_evals,\
hvp_evals,inner_matvecs,final_f,final_gnorm,wall_time_ms";

/// Exact header of the profile CSV.
pub const PROFILE_CSV_HEADER: &str = "solver,metric,tau,rho";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("records JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("profile input: {0}")]
    Profile(String),
    #[error(
        "unknown solver {0:?} (expected one of ls-arc, ls-arc-s, ls-tr, armijo, arc-l2, tr-l2)"
    )]
    UnknownSolver(String),
    #[error("bad problem spec {spec:?}: {reason} (expected name:n or name:n:seed; families: {families})", families = FAMILIES.join(", "))]
    BadProblemSpec { spec: String, reason: String },
}

// ---------------------------------------------------------------------------
// Solvers and problem instances
// ---------------------------------------------------------------------------

/// The six selectable solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Scaled-norm cubic regularization, first-order inner stopping rule.
    LsArc,
    /// Scaled-norm cubic regularization, second-order residual gate.
    LsArcS,
    /// Scaled-norm trust region.
    LsTr,
    /// Armijo backtracking line search.
    Armijo,
    /// Classical Euclidean-norm cubic regularization.
    ArcL2,
    /// Classical Euclidean-norm trust region.
    TrL2,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::LsArc,
        SolverKind::LsArcS,
        SolverKind::LsTr,
        SolverKind::Armijo,
        SolverKind::ArcL2,
        SolverKind::TrL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::LsArc => "ls-arc",
            SolverKind::LsArcS => "ls-arc-s",
            SolverKind::LsTr => "ls-tr",
            SolverKind::Armijo => "armijo",
            SolverKind::ArcL2 => "arc-l2",
            SolverKind::TrL2 => "tr-l2",
        }
    }

    /// Run this solver on one problem.
    pub fn run(self, problem: &Problem, config: &SolverConfig) -> RunRecord {
        match self {
            SolverKind::LsArc => lsarc_solve(problem, config, Variant::FirstOrder),
            SolverKind::LsArcS => lsarc_solve(problem, config, Variant::SecondOrder),
            SolverKind::LsTr => lstr_solve(problem, config),
            SolverKind::Armijo => armijo_solve(problem, config),
            SolverKind::ArcL2 => arc_l2_solve(problem, config),
            SolverKind::TrL2 => tr_l2_solve(problem, config),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ls-arc" => Ok(SolverKind::LsArc),
            "ls-arc-s" => Ok(SolverKind::LsArcS),
            "ls-tr" => Ok(SolverKind::LsTr),
            "armijo" => Ok(SolverKind::Armijo),
            "arc-l2" => Ok(SolverKind::ArcL2),
            "tr-l2" => Ok(SolverKind::TrL2),
            other => Err(HarnessError::UnknownSolver(other.to_string())),
        }
    }
}

/// One problem instance of the benchmark matrix, written `name:n` or
/// `name:n:seed`. The seed only matters for the randomized family.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProblemSpec {
    pub family: String,
    pub n: usize,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(family: &str, n: usize, seed: u64) -> Self {
        ProblemSpec {
            family: family.to_string(),
            n,
            seed,
        }
    }

    /// Instance name used in records and exports: `family:n`, with the seed
    /// appended when nonzero.
    pub fn display_name(&self) -> String {
        if self.seed == 0 {
            format!("{}:{}", self.family, self.n)
        } else {
            format!("{}:{}:{}", self.family, self.n, self.seed)
        }
    }

    /// Materialize the instance, renamed so distinct specs stay distinct in
    /// records and profiles.
    pub fn build(&self) -> Result<Problem, ConfigError> {
        let mut p = make_problem(&self.family, self.n, self.seed)?;
        p.name = self.display_name();
        Ok(p)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_name())
    }
}

impl FromStr for ProblemSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| HarnessError::BadProblemSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad("expected two or three ':'-separated fields"));
        }
        if parts[0].is_empty() {
            return Err(bad("empty family name"));
        }
        let n: usize = parts[1]
            .parse()
            .map_err(|_| bad("dimension is not a positive integer"))?;
        if n == 0 {
            return Err(bad("dimension must be positive"));
        }
        let seed: u64 = if parts.len() == 3 {
            parts[2]
                .parse()
                .map_err(|_| bad("seed is not an integer"))?
        } else {
            0
        };
        Ok(ProblemSpec::new(parts[0], n, seed))
    }
}

// ---------------------------------------------------------------------------
// Run matrix
// ---------------------------------------------------------------------------

fn error_record(problem: String, solver: &str, n: usize, msg: String) -> RunRecord {
    RunRecord {
        problem,
        solver: solver.to_string(),
        n,
        status: Status::Error,
        outer_iters: 0,
        f_evals: 0,
        g_evals: 0,
        hvp_evals: 0,
        inner_matvecs: 0,
        final_f: f64::NAN,
        final_gnorm: f64::NAN,
        wall_time_ms: 0.0,
        error: Some(msg),
        trace: None,
    }
}

/// Run one (problem, solver) pair. Never panics on bad instances: a problem
/// that cannot be built becomes a `status = error` record.
pub fn run_one(spec: &ProblemSpec, kind: SolverKind, config: &SolverConfig) -> RunRecord {
    match spec.build() {
        Ok(problem) => kind.run(&problem, config),
        Err(e) => error_record(spec.display_name(), kind.name(), spec.n, e.to_string()),
    }
}

/// Run the full matrix, one record per (problem, solver) pair, problems
/// outermost. Deterministic given the specs' seeds (wall times excepted);
/// per-pair failures are isolated as error records.
pub fn run_matrix(
    specs: &[ProblemSpec],
    kinds: &[SolverKind],
    config: &SolverConfig,
) -> Vec<RunRecord> {
    let mut records = Vec::with_capacity(specs.len() * kinds.len());
    for spec in specs {
        for &kind in kinds {
            records.push(run_one(spec, kind, config));
        }
    }
    records
}

// ---------------------------------------------------------------------------
// Performance profiles
// ---------------------------------------------------------------------------

/// Cost measure a profile ranks solvers by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    FEvals,
    GEvals,
    /// Wall time is non-deterministic across reruns; evaluation counts are
    /// the canonical comparison metrics.
    WallTimeMs,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::FEvals, Metric::GEvals, Metric::WallTimeMs];

    pub fn name(self) -> &'static str {
        match self {
            Metric::FEvals => "f_evals",
            Metric::GEvals => "g_evals",
            Metric::WallTimeMs => "wall_time_ms",
        }
    }

    /// Raw cost of a run under this metric (failure handling happens in the
    /// profile computation, not here).
    pub fn value(self, rec: &RunRecord) -> f64 {
        match self {
            Metric::FEvals => rec.f_evals as f64,
            Metric::GEvals => rec.g_evals as f64,
            Metric::WallTimeMs => rec.wall_time_ms,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f_evals" => Ok(Metric::FEvals),
            "g_evals" => Ok(Metric::GEvals),
            "wall_time_ms" => Ok(Metric::WallTimeMs),
            other => Err(HarnessError::Profile(format!(
                "unknown metric {other:?} (expected f_evals, g_evals, or wall_time_ms)"
            ))),
        }
    }
}

/// One solver's staircase curve: the fraction of problems it solved within a
/// factor τ of the per-problem best solver.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub solver: String,
    pub metric: String,
    /// Shared breakpoints, sorted ascending, all ≥ 1.
    pub taus: Vec<f64>,
    /// log₂ of the breakpoints, for log-scale plots.
    pub taus_log2: Vec<f64>,
    /// ρ(τ) at each breakpoint, nondecreasing, in [0, 1].
    pub rhos: Vec<f64>,
    /// Per-problem performance ratios in problem order; ∞ where this solver
    /// failed (such runs are never counted at any finite τ).
    pub ratios: Vec<f64>,
}

/// Dolan–Moré performance profiles over one metric.
///
/// Every (problem, solver) pair must be present exactly once. A run that did
/// not converge costs t = ∞. The per-problem ratio is r = t / min_s(t), with
/// ties at the minimum all getting r = 1; when every solver fails a problem
/// its ratios stay ∞ and the problem still counts in the denominator, so no
/// curve can reach 1. Breakpoints are the distinct finite ratios plus τ = 1.
pub fn performance_profile(
    records: &[RunRecord],
    metric: Metric,
) -> Result<Vec<ProfileCurve>, HarnessError> {
    let mut problems: Vec<&str> = Vec::new();
    let mut solvers: Vec<&str> = Vec::new();
    let mut costs: HashMap<(usize, usize), f64> = HashMap::new();
    for rec in records {
        let p = match problems.iter().position(|p| *p == rec.problem) {
            Some(i) => i,
            None => {
                problems.push(&rec.problem);
                problems.len() - 1
            }
        };
        let s = match solvers.iter().position(|s| *s == rec.solver) {
            Some(i) => i,
            None => {
                solvers.push(&rec.solver);
                solvers.len() - 1
            }
        };
        let t = if rec.converged() {
            metric.value(rec)
        } else {
            f64::INFINITY
        };
        if costs.insert((p, s), t).is_some() {
            return Err(HarnessError::Profile(format!(
                "duplicate run for problem {:?}, solver {:?}",
                rec.problem, rec.solver
            )));
        }
    }
    if problems.is_empty() {
        return Err(HarnessError::Profile("no records".to_string()));
    }
    for (p, pname) in problems.iter().enumerate() {
        for (s, sname) in solvers.iter().enumerate() {
            if !costs.contains_key(&(p, s)) {
                return Err(HarnessError::Profile(format!(
                    "missing run for problem {pname:?}, solver {sname:?}"
                )));
            }
        }
    }

    // ratios[s][p] = t / best, with exact 1.0 on ties at the minimum
    let n_p = problems.len();
    let n_s = solvers.len();
    let mut ratios = vec![vec![f64::INFINITY; n_p]; n_s];
    for p in 0..n_p {
        let best = (0..n_s)
            .map(|s| costs[&(p, s)])
            .fold(f64::INFINITY, f64::min);
        for s in 0..n_s {
            let t = costs[&(p, s)];
            // a failed run is infinitely worse even when every solver failed
            // (∞/∞ must not become NaN), and ties at the minimum are exact
            ratios[s][p] = if !t.is_finite() {
                f64::INFINITY
            } else if t == best {
                1.0
            } else {
                t / best
            };
        }
    }

    let mut taus: Vec<f64> = ratios
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .chain(std::iter::once(1.0))
        .collect();
    taus.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    taus.dedup();

    Ok((0..n_s)
        .map(|s| {
            let rhos = taus
                .iter()
                .map(|&tau| {
                    let hits = ratios[s].iter().filter(|&&r| r <= tau).count();
                    hits as f64 / n_p as f64
                })
                .collect();
            ProfileCurve {
                solver: solvers[s].to_string(),
                metric: metric.name().to_string(),
                taus: taus.clone(),
                taus_log2: taus.iter().map(|t| t.log2()).collect(),
                rhos,
                ratios: ratios[s].clone(),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Shortest lossless text form of a float (CSV cells).
fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float serializes")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Render run records as CSV with the fixed 12-column layout
/// (RFC-4180 quoting; traces and error details are JSON-only).
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_CSV_HEADER.split(','))
        .expect("in-memory write");
    for r in records {
        w.write_record([
            r.problem.as_str(),
            r.solver.as_str(),
            &r.n.to_string(),
            r.status.as_str(),
            &r.outer_iters.to_string(),
            &r.f_evals.to_string(),
            &r.g_evals.to_string(),
            &r.hvp_evals.to_string(),
            &r.inner_matvecs.to_string(),
            &fmt_float(r.final_f),
            &fmt_float(r.final_gnorm),
            &fmt_float(r.wall_time_ms),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

/// Render profile curves as CSV rows `solver,metric,tau,rho`.
pub fn profiles_to_csv(curves: &[ProfileCurve]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROFILE_CSV_HEADER.split(','))
        .expect("in-memory write");
    for c in curves {
        for (tau, rho) in c.taus.iter().zip(&c.rhos) {
            w.write_record([
                c.solver.as_str(),
                c.metric.as_str(),
                &fmt_float(*tau),
                &fmt_float(*rho),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

/// Records as pretty JSON (full fidelity: traces, error details, non-finite
/// floats as tokens).
pub fn records_to_json(records: &[RunRecord]) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(records)?)
}

/// Inverse of [`records_to_json`].
pub fn records_from_json(s: &str) -> Result<Vec<RunRecord>, HarnessError> {
    Ok(serde_json::from_str(s)?)
}

/// Write a rendered export, reporting the path on failure.
pub fn write_text(path: &Path, content: &str) -> Result<(), HarnessError> {
    std::fs::write(path, content).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}
