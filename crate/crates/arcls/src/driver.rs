//! Shared outer-loop state: stopping tests, iteration traces, and the
//! conversion of a finished (or aborted) run into a RunRecord.
//!
//! Every solver follows the same skeleton — evaluate at x0, loop until the
//! gradient tolerance / iteration cap / divergence cutoff fires, convert
//! errors into terminal records instead of panicking — so that skeleton
//! lives here once.

use std::time::Instant;

use crate::config::SolverConfig;
use crate::problems::{EvalError, Evaluator, Problem, Vector};
use crate::record::{IterationTrace, RunRecord, Status};

/// Reasons an iteration body must abort the whole run.
#[derive(Debug)]
pub enum Abort {
    /// An oracle evaluation came back non-finite at a point the solver is
    /// committed to (e.g. the gradient of an accepted iterate).
    Eval(EvalError),
    /// A backtracking loop exceeded its trial budget.
    Stalled(String),
}

impl From<EvalError> for Abort {
    fn from(e: EvalError) -> Self {
        Abort::Eval(e)
    }
}

impl Abort {
    pub fn message(&self) -> String {
        match self {
            Abort::Eval(e) => format!("evaluation_failed: {e}"),
            Abort::Stalled(m) => format!("backtracking_stalled: {m}"),
        }
    }
}

/// Mutable outer-loop state shared by all solvers.
pub struct Outer<'a> {
    pub ev: Evaluator<'a>,
    pub config: &'a SolverConfig,
    pub x: Vector,
    pub f: f64,
    pub g: Vector,
    pub gnorm: f64,
    /// Completed outer iterations.
    pub k: usize,
    pub trace: Option<Vec<IterationTrace>>,
    solver: &'static str,
    start: Instant,
}

impl<'a> Outer<'a> {
    /// Evaluate the problem at its start point. On an evaluation failure the
    /// run is already over: the finished error record is returned instead.
    pub fn new(
        problem: &'a Problem,
        config: &'a SolverConfig,
        solver: &'static str,
    ) -> Result<Self, RunRecord> {
        let start = Instant::now();
        let mut ev = Evaluator::new(problem);
        let x = problem.x0.clone();
        let trace = if config.keep_trace {
            Some(Vec::new())
        } else {
            None
        };
        match (ev.value(&x), ev.gradient(&x)) {
            (Ok(f), Ok(g)) => {
                let gnorm = g.norm();
                Ok(Outer {
                    ev,
                    config,
                    x,
                    f,
                    g,
                    gnorm,
                    k: 0,
                    trace,
                    solver,
                    start,
                })
            }
            (f_res, g_res) => {
                let err = f_res
                    .err()
                    .or(g_res.err())
                    .expect("at least one evaluation failed");
                Err(RunRecord {
                    problem: problem.name.clone(),
                    solver: solver.to_string(),
                    n: problem.n,
                    status: Status::Error,
                    outer_iters: 0,
                    f_evals: ev.counters.f_evals,
                    g_evals: ev.counters.g_evals,
                    hvp_evals: ev.counters.hvp_evals,
                    inner_matvecs: ev.counters.inner_matvecs,
                    final_f: f64::NAN,
                    final_gnorm: f64::NAN,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                    error: Some(format!("evaluation_failed: {err}")),
                    trace: None,
                })
            }
        }
    }

    /// First-order convergence / divergence test on the current state.
    pub fn stop_check(&self) -> Option<Status> {
        if self.gnorm <= self.config.gtol {
            return Some(Status::Converged);
        }
        if let Some(f_low) = self.ev.problem.f_low {
            if self.f < f_low - 1.0 {
                return Some(Status::Diverged);
            }
        }
        None
    }

    /// Move to an accepted trial point: store its (already evaluated)
    /// objective value and refresh the gradient.
    pub fn accept(&mut self, x_new: Vector, f_new: f64) -> Result<(), EvalError> {
        self.x = x_new;
        self.f = f_new;
        self.g = self.ev.gradient(&self.x)?;
        self.gnorm = self.g.norm();
        Ok(())
    }

    pub fn push_trace(&mut self, t: IterationTrace) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(t);
        }
    }

    /// Finish the run with a status.
    pub fn finish(self, status: Status) -> RunRecord {
        self.finish_with(status, None)
    }

    /// Finish the run as a terminal error.
    pub fn finish_abort(self, abort: Abort) -> RunRecord {
        let msg = abort.message();
        self.finish_with(Status::Error, Some(msg))
    }

    fn finish_with(self, status: Status, error: Option<String>) -> RunRecord {
        RunRecord {
            problem: self.ev.problem.name.clone(),
            solver: self.solver.to_string(),
            n: self.ev.problem.n,
            status,
            outer_iters: self.k,
            f_evals: self.ev.counters.f_evals,
            g_evals: self.ev.counters.g_evals,
            hvp_evals: self.ev.counters.hvp_evals,
            inner_matvecs: self.ev.counters.inner_matvecs,
            final_f: self.f,
            final_gnorm: self.gnorm,
            wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
            error,
            trace: self.trace,
        }
    }
}
